// Discretized configuration spaces and regions.
//
// Two backends: uniform periodic grids (1D or 2D) and finite mode networks
// with named basis labels. Regions are exact point masks over either backend,
// so set algebra (complement, intersection, disjointness) carries no
// tolerance at all.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace qcp {

class Space {
public:
    virtual ~Space() = default;

    // Number of basis points (grid cells or mode labels).
    virtual std::size_t size() const = 0;
    virtual bool equals(const Space& other) const = 0;
    virtual std::string describe() const = 0;
};

using SpacePtr = std::shared_ptr<const Space>;

bool same_space(const SpacePtr& a, const SpacePtr& b);

// Uniform periodic grid over [-extent/2, extent/2) per axis.
// Points per axis must be a power of two >= 8 (fast-transform backend).
class GridSpace final : public Space {
public:
    static std::shared_ptr<const GridSpace> make_1d(double extent, int points);
    static std::shared_ptr<const GridSpace> make_2d(double extent_x, int points_x,
                                                    double extent_y, int points_y);

    int dimension() const { return dimension_; }
    double extent(int axis) const { return extent_[axis]; }
    int points(int axis) const { return points_[axis]; }
    double spacing(int axis) const { return extent_[axis] / points_[axis]; }

    // Coordinate of grid point i along axis, in [-extent/2, extent/2).
    double coordinate(int axis, int index) const {
        return -0.5 * extent_[axis] + spacing(axis) * index;
    }

    // Flat index of (ix) or (ix, iy); row-major with x outermost.
    std::size_t flat_index(int ix, int iy = 0) const {
        return dimension_ == 1 ? static_cast<std::size_t>(ix)
                               : static_cast<std::size_t>(ix) * points_[1] + iy;
    }
    int axis_index(std::size_t flat, int axis) const;

    std::size_t size() const override;
    bool equals(const Space& other) const override;
    std::string describe() const override;

private:
    GridSpace(int dimension, std::array<double, 2> extent, std::array<int, 2> points);

    int dimension_;
    std::array<double, 2> extent_;
    std::array<int, 2> points_;
};

// Finite set of named basis modes (interferometer arms, pointer states, ...).
class ModeSpace final : public Space {
public:
    static std::shared_ptr<const ModeSpace> make(std::vector<std::string> labels);

    // Product space with labels "a|b"; index = i_a * b.size() + i_b.
    static std::shared_ptr<const ModeSpace> product(const ModeSpace& a, const ModeSpace& b);

    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(std::size_t i) const { return labels_[i]; }
    std::size_t index_of(const std::string& label) const;

    std::size_t size() const override { return labels_.size(); }
    bool equals(const Space& other) const override;
    std::string describe() const override;

private:
    explicit ModeSpace(std::vector<std::string> labels);

    std::vector<std::string> labels_;
};

// Exact point mask over a space. The region algebra is the full power set of
// basis points, so sigma-additivity and projector identities are testable
// without tolerances.
class Region {
public:
    Region() = default;
    Region(SpacePtr space, std::vector<std::uint8_t> mask);

    static Region full(SpacePtr space);
    static Region empty(SpacePtr space);
    static Region of_indices(SpacePtr space, const std::vector<std::size_t>& indices);
    // Grid, any dimension: all points with coordinate(axis) in [lo, hi].
    static Region axis_interval(const std::shared_ptr<const GridSpace>& grid, int axis,
                                double lo, double hi);
    static Region of_labels(const std::shared_ptr<const ModeSpace>& modes,
                            const std::vector<std::string>& labels);
    template <typename Pred>
    static Region of_label_predicate(const std::shared_ptr<const ModeSpace>& modes, Pred pred) {
        std::vector<std::uint8_t> mask(modes->size(), 0);
        for (std::size_t i = 0; i < modes->size(); ++i)
            if (pred(modes->label(i))) mask[i] = 1;
        return Region(modes, std::move(mask));
    }

    const SpacePtr& space() const { return space_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    bool contains(std::size_t i) const { return mask_[i] != 0; }
    std::size_t count() const;
    std::vector<std::size_t> indices() const;

    Region complement() const;
    Region intersect(const Region& other) const;
    Region unite(const Region& other) const;
    bool disjoint_with(const Region& other) const;
    bool same_as(const Region& other) const;
    bool is_empty() const;

    // FNV-1a over the mask bits; used for memo keys.
    std::uint64_t mask_hash() const;

private:
    void check_compatible(const Region& other) const;

    SpacePtr space_;
    std::vector<std::uint8_t> mask_;
};

} // namespace qcp
