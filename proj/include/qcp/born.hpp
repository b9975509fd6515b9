// Position-based measurement models and the operators they induce on the
// microscopic system. A model couples a micro mode space to an apparatus
// pointer through a dense unitary; reading the pointer through an outcome map
// defines, for every outcome set A, the bilinear form
//   h_A(phi, chi) = < phi (x) ready | U^dag E[f^-1(A)] U | chi (x) ready >,
// whose matrix on the micro basis is the POVM element O(A). Frequency-event
// weights for ensembles of identical systems reduce to exact binomial tails
// through the product-process identity, with no exponential state built.

#pragma once

#include "qcp/squant.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qcp {

// Neutral outcome for apparatus configurations that record nothing.
inline const std::string kNeutralOutcome = "(none)";

struct MeasurementModel {
    std::shared_ptr<const ModeSpace> micro;
    std::shared_ptr<const ModeSpace> apparatus;
    std::size_t ready_index = 0;  // initial pointer state
    CMatrix coupling;             // unitary on micro (x) apparatus, within 1e-12
    std::vector<std::string> outcomes;  // excludes the neutral element
    // outcome_of[product label index] = index into outcomes, or nullopt for
    // the neutral element; must be total over product labels.
    std::vector<std::optional<std::size_t>> outcome_of;

    MeasurementModel(std::shared_ptr<const ModeSpace> micro,
                     std::shared_ptr<const ModeSpace> apparatus, std::size_t ready_index,
                     CMatrix coupling, std::vector<std::string> outcomes,
                     std::vector<std::optional<std::size_t>> outcome_of);

    std::size_t micro_dim() const { return micro->size(); }
    std::size_t product_dim() const { return micro->size() * apparatus->size(); }
    // Region of product labels mapped to the outcome (nullopt = neutral).
    std::vector<std::size_t> outcome_labels(const std::optional<std::size_t>& outcome) const;
};

// Positive operator per outcome atom plus the neutral element; unions by
// summation. Invariants checked at assembly: self-adjoint within 1e-12,
// eigenvalues >= -1e-10, atoms plus neutral summing to the identity within
// 1e-10.
struct Povm {
    std::vector<std::string> outcomes;
    std::vector<CMatrix> atom_operators;
    CMatrix neutral_operator;

    const CMatrix& atom(const std::string& outcome) const;
    // Sum of the named atoms (sigma-additivity by construction).
    CMatrix operator_for(const std::vector<std::string>& outcome_set) const;
};

// Assembles the POVM by evaluating the bilinear form on the micro basis.
// Throws invariant-failure with the offending residual if the assembled
// operators violate the Povm invariants.
Povm build_povm(const MeasurementModel& model);

// < phi | O(A) | phi > for a normalized micro state (1e-10 tolerance).
double outcome_probability(const Povm& povm, const std::vector<std::string>& outcome_set,
                           const CVector& phi);
double outcome_probability(const Povm& povm, const std::string& outcome, const CVector& phi);

// Direct position-based probability || E[f^-1(A)] U (phi (x) ready) ||^2; the
// POVM route must match this within 1e-10.
double direct_outcome_probability(const MeasurementModel& model,
                                  const std::vector<std::string>& outcome_set,
                                  const CVector& phi);

// Weight of the neutral outcome; well-designed models keep it at zero.
double neutral_weight(const MeasurementModel& model, const CVector& phi);

// Weight of the frequency event under the N-fold product of the process: the
// set of N-system configurations whose frequency in the region lies within
// eps of the single-system weight p. Equals the exact binomial tail at
// p = weight((t, region)); no 2^N state is materialized.
double frequency_event_weight(const QuantumProcess& qp, long long n, double t,
                              const Region& region, double eps);

// Structured text: dimension header, complex entries as real/imag pairs,
// row-major.
std::string povm_to_text(const Povm& povm);

} // namespace qcp
