#include "stormcells/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stormcells {

GridWindow::GridWindow(int dim, int half_width, double spacing)
    : dim_(dim), half_width_(half_width), spacing_(spacing), site_count_(1)
{
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
    if (half_width < 0)
        throw std::invalid_argument("grid half_width must be >= 0, got " + std::to_string(half_width));
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw std::invalid_argument("grid spacing must be positive and finite");
    for (int a = 0; a < dim_; ++a)
        site_count_ *= static_cast<std::size_t>(side());
}

double GridWindow::cell_measure() const noexcept
{
    return std::pow(spacing_, dim_);
}

Coord GridWindow::coord(Site s) const
{
    if (s >= site_count_)
        throw std::out_of_range("site index out of range");
    Coord c{0, 0, 0};
    const auto n = static_cast<std::size_t>(side());
    for (int a = dim_ - 1; a >= 0; --a) {
        c[a] = static_cast<int>(s % n) - half_width_;
        s /= n;
    }
    return c;
}

bool GridWindow::contains(const Coord& c) const noexcept
{
    for (int a = 0; a < 3; ++a) {
        if (a < dim_) {
            if (c[a] < -half_width_ || c[a] > half_width_)
                return false;
        } else if (c[a] != 0) {
            return false;
        }
    }
    return true;
}

Site GridWindow::site(const Coord& c) const
{
    if (!contains(c))
        throw std::out_of_range("coordinate outside the window");
    Site s = 0;
    const auto n = static_cast<std::size_t>(side());
    for (int a = 0; a < dim_; ++a)
        s = s * n + static_cast<std::size_t>(c[a] + half_width_);
    return s;
}

Point GridWindow::position(Site s) const
{
    const Coord c = coord(s);
    return {c[0] * spacing_, c[1] * spacing_, c[2] * spacing_};
}

bool GridWindow::on_boundary(Site s) const
{
    return sup_norm(s) == half_width_;
}

int GridWindow::sup_norm(Site s) const
{
    const Coord c = coord(s);
    int m = 0;
    for (int a = 0; a < dim_; ++a)
        m = std::max(m, std::abs(c[a]));
    return m;
}

GridWindow make_grid(int dim, int half_width, double spacing)
{
    if (half_width < 1)
        throw std::invalid_argument("grid half_width must be >= 1, got " + std::to_string(half_width));
    return GridWindow(dim, half_width, spacing);
}

SiteSet::SiteSet(GridWindow window, std::vector<Site> members)
    : window_(window), members_(std::move(members))
{
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
        throw std::invalid_argument("site set has duplicate members");
    if (!members_.empty() && members_.back() >= window_.site_count())
        throw std::out_of_range("site set member outside the window");
}

bool SiteSet::contains(Site s) const
{
    return std::binary_search(members_.begin(), members_.end(), s);
}

bool SiteSet::subset_of(const SiteSet& other) const
{
    return std::includes(other.members_.begin(), other.members_.end(), members_.begin(),
                         members_.end());
}

SiteSet box_sites(const GridWindow& window, int r)
{
    if (r < 0 || r > window.half_width())
        throw std::invalid_argument("box radius must lie in [0, half_width], got " +
                                    std::to_string(r));
    std::vector<Site> out;
    for (Site s = 0; s < window.site_count(); ++s)
        if (window.sup_norm(s) <= r)
            out.push_back(s);
    return SiteSet(window, std::move(out));
}

SiteSet distant_sites(const GridWindow& window, const SiteSet& base, double r)
{
    if (!(r >= 0.0))
        throw std::invalid_argument("distance threshold must be non-negative");
    if (base.empty())
        throw std::invalid_argument("base set must be non-empty");
    const double r2 = r * r;
    std::vector<Point> anchors;
    anchors.reserve(base.size());
    for (Site s : base.members())
        anchors.push_back(window.position(s));

    std::vector<Site> out;
    for (Site x = 0; x < window.site_count(); ++x) {
        const Point p = window.position(x);
        bool far = true;
        for (const Point& q : anchors) {
            double d2 = 0.0;
            for (int a = 0; a < window.dim(); ++a)
                d2 += (p[a] - q[a]) * (p[a] - q[a]);
            if (d2 < r2) {
                far = false;
                break;
            }
        }
        if (far)
            out.push_back(x);
    }
    return SiteSet(window, std::move(out));
}

SiteSet complement(const SiteSet& set)
{
    std::vector<Site> out;
    out.reserve(set.window().site_count() - set.size());
    auto it = set.members().begin();
    for (Site s = 0; s < set.window().site_count(); ++s) {
        if (it != set.members().end() && *it == s)
            ++it;
        else
            out.push_back(s);
    }
    return SiteSet(set.window(), std::move(out));
}

}  // namespace stormcells
