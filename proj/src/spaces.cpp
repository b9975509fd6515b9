#include "qcp/spaces.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qcp {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_axis(double extent, int points) {
    if (points < 8 || !power_of_two(points))
        throw std::invalid_argument("GridSpace: points per axis must be a power of two >= 8");
    if (!(extent > 0.0))
        throw std::invalid_argument("GridSpace: extent must be positive");
}

} // namespace

bool same_space(const SpacePtr& a, const SpacePtr& b) {
    if (!a || !b) return false;
    if (a.get() == b.get()) return true;
    return a->equals(*b);
}

GridSpace::GridSpace(int dimension, std::array<double, 2> extent, std::array<int, 2> points)
    : dimension_(dimension), extent_(extent), points_(points) {}

std::shared_ptr<const GridSpace> GridSpace::make_1d(double extent, int points) {
    check_axis(extent, points);
    return std::shared_ptr<const GridSpace>(new GridSpace(1, {extent, 0.0}, {points, 1}));
}

std::shared_ptr<const GridSpace> GridSpace::make_2d(double extent_x, int points_x,
                                                    double extent_y, int points_y) {
    check_axis(extent_x, points_x);
    check_axis(extent_y, points_y);
    return std::shared_ptr<const GridSpace>(
        new GridSpace(2, {extent_x, extent_y}, {points_x, points_y}));
}

int GridSpace::axis_index(std::size_t flat, int axis) const {
    if (dimension_ == 1) return static_cast<int>(flat);
    return axis == 0 ? static_cast<int>(flat / points_[1]) : static_cast<int>(flat % points_[1]);
}

std::size_t GridSpace::size() const {
    return static_cast<std::size_t>(points_[0]) * (dimension_ == 2 ? points_[1] : 1);
}

bool GridSpace::equals(const Space& other) const {
    auto* g = dynamic_cast<const GridSpace*>(&other);
    if (!g) return false;
    return dimension_ == g->dimension_ && extent_ == g->extent_ && points_ == g->points_;
}

std::string GridSpace::describe() const {
    std::ostringstream os;
    os << "grid" << dimension_ << "d(";
    for (int a = 0; a < dimension_; ++a) {
        if (a) os << " x ";
        os << points_[a] << "pts/" << extent_[a];
    }
    os << ")";
    return os.str();
}

ModeSpace::ModeSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {}

std::shared_ptr<const ModeSpace> ModeSpace::make(std::vector<std::string> labels) {
    if (labels.size() < 2)
        throw std::invalid_argument("ModeSpace: need at least 2 labels");
    std::set<std::string> uniq(labels.begin(), labels.end());
    if (uniq.size() != labels.size())
        throw std::invalid_argument("ModeSpace: labels must be unique");
    return std::shared_ptr<const ModeSpace>(new ModeSpace(std::move(labels)));
}

std::shared_ptr<const ModeSpace> ModeSpace::product(const ModeSpace& a, const ModeSpace& b) {
    std::vector<std::string> labels;
    labels.reserve(a.size() * b.size());
    for (const auto& la : a.labels())
        for (const auto& lb : b.labels()) labels.push_back(la + "|" + lb);
    return make(std::move(labels));
}

std::size_t ModeSpace::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end())
        throw std::invalid_argument("ModeSpace: unknown label '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

bool ModeSpace::equals(const Space& other) const {
    auto* m = dynamic_cast<const ModeSpace*>(&other);
    return m && labels_ == m->labels_;
}

std::string ModeSpace::describe() const {
    return "modes(" + std::to_string(labels_.size()) + ")";
}

Region::Region(SpacePtr space, std::vector<std::uint8_t> mask)
    : space_(std::move(space)), mask_(std::move(mask)) {
    if (!space_) throw std::invalid_argument("Region: null space");
    if (mask_.size() != space_->size())
        throw std::invalid_argument("Region: mask length does not match space size");
}

Region Region::full(SpacePtr space) {
    std::vector<std::uint8_t> mask(space->size(), 1);
    return Region(std::move(space), std::move(mask));
}

Region Region::empty(SpacePtr space) {
    std::vector<std::uint8_t> mask(space->size(), 0);
    return Region(std::move(space), std::move(mask));
}

Region Region::of_indices(SpacePtr space, const std::vector<std::size_t>& indices) {
    std::vector<std::uint8_t> mask(space->size(), 0);
    for (std::size_t i : indices) {
        if (i >= mask.size()) throw std::invalid_argument("Region: index out of range");
        mask[i] = 1;
    }
    return Region(std::move(space), std::move(mask));
}

Region Region::axis_interval(const std::shared_ptr<const GridSpace>& grid, int axis,
                             double lo, double hi) {
    if (axis < 0 || axis >= grid->dimension())
        throw std::invalid_argument("Region: axis out of range");
    std::vector<std::uint8_t> mask(grid->size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        double x = grid->coordinate(axis, grid->axis_index(i, axis));
        if (x >= lo && x <= hi) mask[i] = 1;
    }
    return Region(grid, std::move(mask));
}

Region Region::of_labels(const std::shared_ptr<const ModeSpace>& modes,
                         const std::vector<std::string>& labels) {
    std::vector<std::uint8_t> mask(modes->size(), 0);
    for (const auto& l : labels) mask[modes->index_of(l)] = 1;
    return Region(modes, std::move(mask));
}

std::size_t Region::count() const {
    std::size_t n = 0;
    for (auto b : mask_) n += b;
    return n;
}

std::vector<std::size_t> Region::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i]) out.push_back(i);
    return out;
}

Region Region::complement() const {
    std::vector<std::uint8_t> mask(mask_.size());
    for (std::size_t i = 0; i < mask_.size(); ++i) mask[i] = mask_[i] ? 0 : 1;
    return Region(space_, std::move(mask));
}

Region Region::intersect(const Region& other) const {
    check_compatible(other);
    std::vector<std::uint8_t> mask(mask_.size());
    for (std::size_t i = 0; i < mask_.size(); ++i) mask[i] = mask_[i] & other.mask_[i];
    return Region(space_, std::move(mask));
}

Region Region::unite(const Region& other) const {
    check_compatible(other);
    std::vector<std::uint8_t> mask(mask_.size());
    for (std::size_t i = 0; i < mask_.size(); ++i) mask[i] = mask_[i] | other.mask_[i];
    return Region(space_, std::move(mask));
}

bool Region::disjoint_with(const Region& other) const {
    check_compatible(other);
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i] && other.mask_[i]) return false;
    return true;
}

bool Region::same_as(const Region& other) const {
    check_compatible(other);
    return mask_ == other.mask_;
}

bool Region::is_empty() const {
    for (auto b : mask_)
        if (b) return false;
    return true;
}

std::uint64_t Region::mask_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : mask_) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

void Region::check_compatible(const Region& other) const {
    if (!same_space(space_, other.space_))
        throw std::invalid_argument("Region: space-mismatch between regions");
}

} // namespace qcp
