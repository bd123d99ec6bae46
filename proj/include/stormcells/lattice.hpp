#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stormcells {

/// Linear index of a lattice site in the normative row-major order.
using Site = std::size_t;

/// Integer lattice coordinates; entries past `dim` are always zero.
using Coord = std::array<int, 3>;

/// Physical (spacing-scaled) position.
using Point = std::array<double, 3>;

/// Finite window [-R, R]^d of the lattice Z^d, d in {1, 2, 3}.
///
/// Sites are enumerated row-major with the last coordinate varying fastest,
/// starting at (-R, ..., -R). The physical position of a site is its integer
/// coordinate times `spacing`; the measure of a site set is its count times
/// spacing^d. The constructor also accepts R = 0, a single-site window used
/// by tests; make_grid insists on R >= 1.
class GridWindow {
  public:
    GridWindow(int dim, int half_width, double spacing);

    int dim() const noexcept { return dim_; }
    int half_width() const noexcept { return half_width_; }
    double spacing() const noexcept { return spacing_; }
    int side() const noexcept { return 2 * half_width_ + 1; }
    std::size_t site_count() const noexcept { return site_count_; }

    /// Measure of a single site.
    double cell_measure() const noexcept;
    /// Physical side length 2R * spacing.
    double physical_side() const noexcept { return 2.0 * half_width_ * spacing_; }

    Coord coord(Site s) const;
    Site site(const Coord& c) const;
    bool contains(const Coord& c) const noexcept;
    Point position(Site s) const;
    Site origin() const { return site(Coord{0, 0, 0}); }

    /// True when some coordinate of the site equals +-R.
    bool on_boundary(Site s) const;

    /// Chebyshev norm of the site coordinate; s lies in B_r iff this is <= r.
    int sup_norm(Site s) const;

    bool operator==(const GridWindow&) const = default;

  private:
    int dim_;
    int half_width_;
    double spacing_;
    std::size_t site_count_;
};

GridWindow make_grid(int dim, int half_width, double spacing);

/// Sorted set of distinct sites of one window.
class SiteSet {
  public:
    SiteSet(GridWindow window, std::vector<Site> members);

    const GridWindow& window() const noexcept { return window_; }
    std::span<const Site> members() const noexcept { return members_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    bool contains(Site s) const;
    /// Subset test against another set on the same window.
    bool subset_of(const SiteSet& other) const;
    double measure() const { return static_cast<double>(size()) * window_.cell_measure(); }

  private:
    GridWindow window_;
    std::vector<Site> members_;
};

/// The box B_r = [-r, r]^d, which must fit inside the window.
SiteSet box_sites(const GridWindow& window, int r);

/// All window sites whose Euclidean distance to `base` is at least `r`.
///
/// The set S_r^c used for beta-mixing coefficients is read as
/// {x in window : d(x, S) >= r}; r = 0 yields the whole window.
SiteSet distant_sites(const GridWindow& window, const SiteSet& base, double r);

/// Complement of `set` within its window.
SiteSet complement(const SiteSet& set);

}  // namespace stormcells
