#include "qcp/born.hpp"

#include "qcp/classical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcp {

MeasurementModel::MeasurementModel(std::shared_ptr<const ModeSpace> micro_in,
                                   std::shared_ptr<const ModeSpace> apparatus_in,
                                   std::size_t ready_index_in, CMatrix coupling_in,
                                   std::vector<std::string> outcomes_in,
                                   std::vector<std::optional<std::size_t>> outcome_of_in)
    : micro(std::move(micro_in)),
      apparatus(std::move(apparatus_in)),
      ready_index(ready_index_in),
      coupling(std::move(coupling_in)),
      outcomes(std::move(outcomes_in)),
      outcome_of(std::move(outcome_of_in)) {
    if (ready_index >= apparatus->size())
        throw std::invalid_argument("MeasurementModel: ready state out of range");
    auto dim = static_cast<Eigen::Index>(product_dim());
    if (coupling.rows() != dim || coupling.cols() != dim)
        throw std::invalid_argument("MeasurementModel: coupling dimension mismatch");
    if (unitarity_defect(coupling) > 1e-12)
        throw std::invalid_argument("MeasurementModel: coupling is not unitary within 1e-12");
    if (outcome_of.size() != product_dim())
        throw std::invalid_argument("MeasurementModel: outcome map must be total");
    for (const auto& o : outcome_of)
        if (o && *o >= outcomes.size())
            throw std::invalid_argument("MeasurementModel: outcome index out of range");
}

std::vector<std::size_t> MeasurementModel::outcome_labels(
    const std::optional<std::size_t>& outcome) const {
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < outcome_of.size(); ++i)
        if (outcome_of[i] == outcome) labels.push_back(i);
    return labels;
}

const CMatrix& Povm::atom(const std::string& outcome) const {
    auto it = std::find(outcomes.begin(), outcomes.end(), outcome);
    if (it == outcomes.end())
        throw std::invalid_argument("Povm: unknown outcome '" + outcome + "'");
    return atom_operators[static_cast<std::size_t>(it - outcomes.begin())];
}

CMatrix Povm::operator_for(const std::vector<std::string>& outcome_set) const {
    CMatrix sum = CMatrix::Zero(neutral_operator.rows(), neutral_operator.cols());
    for (const auto& name : outcome_set) {
        if (name == kNeutralOutcome)
            sum += neutral_operator;
        else
            sum += atom(name);
    }
    return sum;
}

namespace {

CVector embed_with_ready(const MeasurementModel& model, const CVector& phi) {
    auto d_app = static_cast<Eigen::Index>(model.apparatus->size());
    CVector full = CVector::Zero(static_cast<Eigen::Index>(model.product_dim()));
    for (Eigen::Index i = 0; i < phi.size(); ++i)
        full[i * d_app + static_cast<Eigen::Index>(model.ready_index)] = phi[i];
    return full;
}

CMatrix assemble_operator(const MeasurementModel& model, const std::vector<CVector>& columns,
                          const std::vector<std::size_t>& labels) {
    auto d = static_cast<Eigen::Index>(model.micro_dim());
    CMatrix op(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            Complex h(0.0, 0.0);
            for (std::size_t l : labels)
                h += std::conj(columns[static_cast<std::size_t>(i)][static_cast<Eigen::Index>(l)]) *
                     columns[static_cast<std::size_t>(j)][static_cast<Eigen::Index>(l)];
            op(i, j) = h;
        }
    return op;
}

void check_povm_invariants(const Povm& povm) {
    auto d = povm.neutral_operator.rows();
    CMatrix total = povm.neutral_operator;
    for (const auto& op : povm.atom_operators) total += op;
    double completeness = (total - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (completeness > 1e-10) {
        std::ostringstream os;
        os << "invariant-failure: POVM completeness residual " << completeness;
        throw std::runtime_error(os.str());
    }
    auto check_one = [](const CMatrix& op, const char* what) {
        double sym = (op - CMatrix(op.adjoint())).cwiseAbs().maxCoeff();
        if (sym > 1e-12) {
            std::ostringstream os;
            os << "invariant-failure: " << what << " self-adjointness residual " << sym;
            throw std::runtime_error(os.str());
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> es(op);
        if (es.eigenvalues().minCoeff() < -1e-10) {
            std::ostringstream os;
            os << "invariant-failure: " << what << " eigenvalue " << es.eigenvalues().minCoeff();
            throw std::runtime_error(os.str());
        }
    };
    for (std::size_t a = 0; a < povm.atom_operators.size(); ++a)
        check_one(povm.atom_operators[a], povm.outcomes[a].c_str());
    check_one(povm.neutral_operator, "neutral");
}

} // namespace

Povm build_povm(const MeasurementModel& model) {
    auto d = static_cast<Eigen::Index>(model.micro_dim());
    std::vector<CVector> columns;  // U (e_i (x) ready)
    columns.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        CVector e = CVector::Zero(d);
        e[i] = 1.0;
        columns.push_back(model.coupling * embed_with_ready(model, e));
    }

    Povm povm;
    povm.outcomes = model.outcomes;
    for (std::size_t a = 0; a < model.outcomes.size(); ++a)
        povm.atom_operators.push_back(assemble_operator(model, columns, model.outcome_labels(a)));
    povm.neutral_operator = assemble_operator(model, columns, model.outcome_labels(std::nullopt));
    check_povm_invariants(povm);
    return povm;
}

double outcome_probability(const Povm& povm, const std::vector<std::string>& outcome_set,
                           const CVector& phi) {
    if (std::abs(phi.squaredNorm() - 1.0) > 1e-10)
        throw std::invalid_argument("outcome_probability: unnormalized input");
    CMatrix op = povm.operator_for(outcome_set);
    return (phi.dot(op * phi)).real();
}

double outcome_probability(const Povm& povm, const std::string& outcome, const CVector& phi) {
    return outcome_probability(povm, std::vector<std::string>{outcome}, phi);
}

double direct_outcome_probability(const MeasurementModel& model,
                                  const std::vector<std::string>& outcome_set,
                                  const CVector& phi) {
    CVector evolved = model.coupling * embed_with_ready(model, phi);
    double mass = 0.0;
    for (const auto& name : outcome_set) {
        std::optional<std::size_t> outcome;
        if (name != kNeutralOutcome) {
            auto it = std::find(model.outcomes.begin(), model.outcomes.end(), name);
            if (it == model.outcomes.end())
                throw std::invalid_argument("direct_outcome_probability: unknown outcome");
            outcome = static_cast<std::size_t>(it - model.outcomes.begin());
        }
        for (std::size_t l : model.outcome_labels(outcome))
            mass += std::norm(evolved[static_cast<Eigen::Index>(l)]);
    }
    return mass;
}

double neutral_weight(const MeasurementModel& model, const CVector& phi) {
    return direct_outcome_probability(model, {kNeutralOutcome}, phi);
}

double frequency_event_weight(const QuantumProcess& qp, long long n, double t,
                              const Region& region, double eps) {
    if (n < 1 || n > 1000000)
        throw std::invalid_argument("frequency_event_weight: N out of range");
    double p = sset_weight(qp, SSet{t, region});
    // Degenerate single-system weights make the frequency event trivial.
    if (p <= 0.0) return eps >= 0.0 ? 1.0 : 0.0;
    if (p >= 1.0) return 1.0;
    return frequency_event_probability(p, eps, n);
}

std::string povm_to_text(const Povm& povm) {
    std::ostringstream os;
    auto d = povm.neutral_operator.rows();
    os << "povm\n";
    os << "dim " << d << "\n";
    os << "outcomes " << povm.outcomes.size() << "\n";
    char buf[64];
    auto dump = [&](const std::string& name, const CMatrix& op) {
        os << "outcome " << name << "\n";
        for (Eigen::Index r = 0; r < d; ++r) {
            for (Eigen::Index c = 0; c < d; ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g %.17g", op(r, c).real(), op(r, c).imag());
                os << (c ? " " : "") << buf;
            }
            os << "\n";
        }
    };
    for (std::size_t a = 0; a < povm.outcomes.size(); ++a)
        dump(povm.outcomes[a], povm.atom_operators[a]);
    dump(kNeutralOutcome, povm.neutral_operator);
    return os.str();
}

} // namespace qcp
