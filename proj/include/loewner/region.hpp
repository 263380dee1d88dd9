#pragma once

// Curves and regions in the two canonical charts (upper half-plane H, unit
// disk D).  Regions are used for neighborhood-stay tests: a polygon kind
// (closed boundary polyline, winding-number membership) covers the
// geodesic-bounded and semicircle-plus-strip neighborhoods, and a tube kind
// (all points within a radius of a core polyline) covers neighborhoods of
// generic reference curves.  Membership always carries a clearance from the
// boundary, with tolerance disks around marked points where curves are
// allowed to touch the boundary.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "loewner/mapchain.hpp"

namespace loewner {

enum class Chart { H, D };

inline const char* chart_name(Chart c) { return c == Chart::H ? "H" : "D"; }

struct CurvePath {
    Chart chart = Chart::H;
    std::vector<cplx> pts;
    std::map<std::string, cplx> marked; // named marked points ("x", "y", ...)
};

// ---------------------------------------------------------------------------
// basic planar geometry
// ---------------------------------------------------------------------------

inline double dist_point_segment(cplx z, cplx a, cplx b) {
    cplx ab = b - a;
    double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(z - a);
    double t = std::clamp(std::real(std::conj(ab) * (z - a)) / len2, 0.0, 1.0);
    return std::abs(z - (a + t * ab));
}

inline double dist_point_polyline(cplx z, const std::vector<cplx>& poly, bool closed = false) {
    if (poly.empty()) return std::numeric_limits<double>::infinity();
    if (poly.size() == 1) return std::abs(z - poly[0]);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < poly.size(); ++i)
        d = std::min(d, dist_point_segment(z, poly[i], poly[i + 1]));
    if (closed) d = std::min(d, dist_point_segment(z, poly.back(), poly.front()));
    return d;
}

inline double cross2(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

// proper or touching intersection of segments [a,b] and [c,d]
inline bool segments_intersect(cplx a, cplx b, cplx c, cplx d) {
    auto orient = [](cplx p, cplx q, cplx r) {
        double v = cross2(q - p, r - p);
        double eps = 1e-14 * (std::abs(q - p) * std::abs(r - p) + 1e-300);
        return v > eps ? 1 : (v < -eps ? -1 : 0);
    };
    int o1 = orient(a, b, c), o2 = orient(a, b, d);
    int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    auto on_seg = [](cplx p, cplx q, cplx r) { // r collinear with pq: is it between?
        return std::min(p.real(), q.real()) - 1e-14 <= r.real() &&
               r.real() <= std::max(p.real(), q.real()) + 1e-14 &&
               std::min(p.imag(), q.imag()) - 1e-14 <= r.imag() &&
               r.imag() <= std::max(p.imag(), q.imag()) + 1e-14;
    };
    if (o1 == 0 && on_seg(a, b, c)) return true;
    if (o2 == 0 && on_seg(a, b, d)) return true;
    if (o3 == 0 && on_seg(c, d, a)) return true;
    if (o4 == 0 && on_seg(c, d, b)) return true;
    return false;
}

// winding number of a closed polyline around z (standard crossing form);
// nonzero means inside for Jordan boundaries
inline int winding_number(const std::vector<cplx>& poly, cplx z) {
    int wn = 0;
    std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        cplx a = poly[i], b = poly[(i + 1) % n];
        if (a.imag() <= z.imag()) {
            if (b.imag() > z.imag() && cross2(b - a, z - a) > 0.0) ++wn;
        } else {
            if (b.imag() <= z.imag() && cross2(b - a, z - a) < 0.0) --wn;
        }
    }
    return wn;
}

// simple-ness check for an open polyline, grid-bucketed so long curves stay
// cheap; adjacent segments share an endpoint and are exempt
inline bool polyline_is_simple(const std::vector<cplx>& pts) {
    std::size_t n = pts.size();
    if (n < 3) return true;
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300, maxlen = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lo_x = std::min(lo_x, pts[i].real());
        hi_x = std::max(hi_x, pts[i].real());
        lo_y = std::min(lo_y, pts[i].imag());
        hi_y = std::max(hi_y, pts[i].imag());
        if (i + 1 < n) maxlen = std::max(maxlen, std::abs(pts[i + 1] - pts[i]));
    }
    double cell = std::max(maxlen, 1e-12);
    int nx = std::max(1, std::min<int>(2048, int((hi_x - lo_x) / cell) + 1));
    int ny = std::max(1, std::min<int>(2048, int((hi_y - lo_y) / cell) + 1));
    double sx = (hi_x - lo_x) > 0 ? nx / (hi_x - lo_x) : 0.0;
    double sy = (hi_y - lo_y) > 0 ? ny / (hi_y - lo_y) : 0.0;
    std::vector<std::vector<int>> bucket(std::size_t(nx) * ny);
    auto cells_of = [&](cplx a, cplx b, auto&& fn) {
        int x0 = std::clamp(int((std::min(a.real(), b.real()) - lo_x) * sx), 0, nx - 1);
        int x1 = std::clamp(int((std::max(a.real(), b.real()) - lo_x) * sx), 0, nx - 1);
        int y0 = std::clamp(int((std::min(a.imag(), b.imag()) - lo_y) * sy), 0, ny - 1);
        int y1 = std::clamp(int((std::max(a.imag(), b.imag()) - lo_y) * sy), 0, ny - 1);
        for (int gx = x0; gx <= x1; ++gx)
            for (int gy = y0; gy <= y1; ++gy) fn(std::size_t(gy) * nx + gx);
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        bool bad = false;
        cells_of(pts[i], pts[i + 1], [&](std::size_t c) {
            if (bad) return;
            for (int j : bucket[c]) {
                if (std::size_t(j + 1) >= i) continue; // adjacent or already checked pair
                if (segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1])) bad = true;
            }
        });
        if (bad) return false;
        cells_of(pts[i], pts[i + 1], [&](std::size_t c) {
            if (bucket[c].empty() || bucket[c].back() != int(i)) bucket[c].push_back(int(i));
        });
    }
    return true;
}

// any segment of polyline a within `tol` of any segment of polyline b
inline bool polylines_touch(const std::vector<cplx>& a, const std::vector<cplx>& b, double tol) {
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            if (segments_intersect(a[i], a[i + 1], b[j], b[j + 1])) return true;
            if (tol > 0.0) {
                if (dist_point_segment(a[i], b[j], b[j + 1]) < tol ||
                    dist_point_segment(a[i + 1], b[j], b[j + 1]) < tol ||
                    dist_point_segment(b[j], a[i], a[i + 1]) < tol ||
                    dist_point_segment(b[j + 1], a[i], a[i + 1]) < tol)
                    return true;
            }
        }
    return false;
}

// ---------------------------------------------------------------------------
// Region
// ---------------------------------------------------------------------------

struct MarkedDisk {
    cplx center;
    double radius;
};

struct Region {
    Chart chart = Chart::D;
    // polygon kind: closed Jordan boundary, interior on the left (CCW)
    std::vector<cplx> boundary;
    // when set, region = (chart domain) minus the closed polygon instead
    bool complement = false;
    // tube kind (tube_radius > 0): points within tube_radius of the core,
    // intersected with the chart domain
    std::vector<cplx> core;
    double tube_radius = 0.0;
    std::vector<MarkedDisk> marked_disks;

    bool is_tube() const { return tube_radius > 0.0; }

    bool in_chart(cplx z) const {
        return chart == Chart::H ? z.imag() > 0.0 : std::abs(z) < 1.0;
    }

    bool in_marked_disk(cplx z) const {
        for (const auto& d : marked_disks)
            if (std::abs(z - d.center) <= d.radius) return true;
        return false;
    }

    // distance from z to the region's own boundary arcs (not the chart edge)
    double boundary_distance(cplx z) const {
        if (is_tube()) {
            double d = std::abs(tube_radius - dist_point_polyline(z, core));
            if (chart == Chart::D) d = std::min(d, std::abs(1.0 - std::abs(z)));
            return d;
        }
        return dist_point_polyline(z, boundary, /*closed=*/true);
    }

    bool contains_point(cplx z, double clearance) const {
        if (in_marked_disk(z)) return true;
        if (!in_chart(z)) return false;
        if (is_tube()) {
            if (chart == Chart::D && std::abs(z) >= 1.0 - clearance) return false;
            return dist_point_polyline(z, core) <= tube_radius - clearance;
        }
        if (dist_point_polyline(z, boundary, true) <= clearance) return false;
        bool inside = winding_number(boundary, z) != 0;
        return complement ? !inside : inside;
    }

    bool contains_curve(const CurvePath& c, double clearance) const {
        if (c.chart != chart) throw std::invalid_argument("region/curve chart mismatch");
        for (cplx z : c.pts)
            if (!contains_point(z, clearance)) return false;
        return true;
    }
};

// coarse inside/outside grid over the region's bounding box; cells that might
// straddle the boundary fall back to the exact test.  Exists because the
// neighborhood-stay experiments test millions of vertices against one region.
struct RegionRaster {
    const Region* region = nullptr;
    double clearance = 0.0;
    double lo_x = 0, lo_y = 0, inv_step = 0;
    int n = 0;
    std::vector<signed char> cell; // 1 inside, 0 outside, -1 exact test needed

    RegionRaster() = default;
    RegionRaster(const Region& r, double clr, int grid = 512) : region(&r), clearance(clr), n(grid) {
        double hx = -1e300, hy = -1e300;
        lo_x = lo_y = 1e300;
        auto grow = [&](cplx z) {
            lo_x = std::min(lo_x, z.real());
            hx = std::max(hx, z.real());
            lo_y = std::min(lo_y, z.imag());
            hy = std::max(hy, z.imag());
        };
        for (cplx z : r.boundary) grow(z);
        for (cplx z : r.core) grow(z + cplx(r.tube_radius, r.tube_radius)), grow(z - cplx(r.tube_radius, r.tube_radius));
        if (r.chart == Chart::D) { grow(cplx(-1, -1)); grow(cplx(1, 1)); }
        double w = std::max(hx - lo_x, hy - lo_y);
        if (!(w > 0)) w = 1.0;
        w *= 1.0 + 4.0 / n;
        lo_x -= 2.0 * w / n;
        lo_y -= 2.0 * w / n;
        inv_step = n / w;
        double halfdiag = 0.7072 * w / n;
        cell.assign(std::size_t(n) * n, -1);
        for (int gy = 0; gy < n; ++gy)
            for (int gx = 0; gx < n; ++gx) {
                cplx zc(lo_x + (gx + 0.5) / inv_step, lo_y + (gy + 0.5) / inv_step);
                double margin = r.boundary_distance(zc);
                bool near_marked = false;
                for (const auto& d : r.marked_disks)
                    if (std::abs(zc - d.center) <= d.radius + halfdiag) near_marked = true;
                if (near_marked) continue; // exact
                if (r.chart == Chart::D && std::abs(1.0 - std::abs(zc)) <= halfdiag + clearance) continue;
                if (r.chart == Chart::H && std::abs(zc.imag()) <= halfdiag) continue;
                if (std::abs(margin - clearance) <= halfdiag) continue;
                cell[std::size_t(gy) * n + gx] = r.contains_point(zc, clearance) ? 1 : 0;
            }
    }

    bool contains(cplx z) const {
        int gx = int((z.real() - lo_x) * inv_step);
        int gy = int((z.imag() - lo_y) * inv_step);
        if (gx < 0 || gy < 0 || gx >= n || gy >= n) return region->contains_point(z, clearance);
        signed char c = cell[std::size_t(gy) * n + gx];
        if (c < 0) return region->contains_point(z, clearance);
        return c != 0;
    }

    bool contains_curve(const CurvePath& c) const {
        if (c.chart != region->chart) throw std::invalid_argument("region/curve chart mismatch");
        for (cplx z : c.pts)
            if (!contains(z)) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// hyperbolic geodesics in D
// ---------------------------------------------------------------------------

// circle orthogonal to the unit circle through p (on the boundary) and q
// (boundary or interior); returns false when the geodesic is a diameter
inline bool geodesic_circle(cplx p, cplx q, cplx& center, double& radius) {
    // orthogonality |c|^2 = r^2 + 1 plus incidence gives linear equations
    //   Re(p conj(c)) = 1            (|p| = 1)
    //   Re(q conj(c)) = (1+|q|^2)/2
    double a11 = p.real(), a12 = p.imag(), b1 = 1.0;
    double a21 = q.real(), a22 = q.imag(), b2 = 0.5 * (1.0 + std::norm(q));
    double det = a11 * a22 - a12 * a21;
    if (std::abs(det) < 1e-12 * (std::abs(p) + std::abs(q) + 1.0)) return false;
    center = cplx((b1 * a22 - b2 * a12) / det, (a11 * b2 - a21 * b1) / det);
    double r2 = std::norm(center) - 1.0;
    if (r2 <= 0.0) return false;
    radius = std::sqrt(r2);
    return true;
}

inline CurvePath hyperbolic_geodesic(cplx p, cplx q, int resolution) {
    if (resolution < 2) throw std::invalid_argument("geodesic resolution must be >= 2");
    if (std::abs(p - q) < 1e-14) throw std::invalid_argument("coincident geodesic endpoints");
    CurvePath out;
    out.chart = Chart::D;
    out.pts.reserve(resolution + 1);
    cplx c;
    double r;
    if (!geodesic_circle(p, q, c, r)) {
        for (int i = 0; i <= resolution; ++i)
            out.pts.push_back(p + (q - p) * (double(i) / resolution));
        return out;
    }
    double a0 = std::arg(p - c), a1 = std::arg(q - c);
    double da = a1 - a0;
    while (da > kPi) da -= 2.0 * kPi;
    while (da < -kPi) da += 2.0 * kPi; // the arc inside D is always the short one
    for (int i = 0; i <= resolution; ++i)
        out.pts.push_back(c + std::polar(r, a0 + da * (double(i) / resolution)));
    out.pts.front() = p;
    out.pts.back() = q;
    return out;
}

namespace detail {
inline void append_circle_arc(std::vector<cplx>& pts, cplx c, double r, double a0, double a1,
                              int resolution) {
    for (int i = 1; i <= resolution; ++i)
        pts.push_back(c + std::polar(r, a0 + (a1 - a0) * (double(i) / resolution)));
}
} // namespace detail

// ---------------------------------------------------------------------------
// neighborhood builders (all in the D chart)
// ---------------------------------------------------------------------------

// Neighborhood of the diameter [-1,1]: D minus the two caps cut off by the
// hyperbolic geodesics joining e^{i eps} to e^{i(pi-eps)} and their mirror.
// Boundary (CCW): upper geodesic right-to-left, circle arc around -1, lower
// geodesic left-to-right, circle arc around +1.
inline Region chordal_geodesic_neighborhood(double eps, int resolution = 256,
                                            double marked_radius = 0.0) {
    if (!(eps > 0.0 && eps < kPi / 2))
        throw std::invalid_argument("neighborhood size out of range");
    Region r;
    r.chart = Chart::D;
    auto upper = hyperbolic_geodesic(std::polar(1.0, eps), std::polar(1.0, kPi - eps), resolution);
    auto lower = hyperbolic_geodesic(std::polar(1.0, kPi + eps), std::polar(1.0, -eps), resolution);
    r.boundary = upper.pts;
    detail::append_circle_arc(r.boundary, 0.0, 1.0, kPi - eps, kPi + eps, std::max(8, resolution / 8));
    r.boundary.insert(r.boundary.end(), lower.pts.begin() + 1, lower.pts.end());
    detail::append_circle_arc(r.boundary, 0.0, 1.0, -eps, eps, std::max(8, resolution / 8));
    r.boundary.pop_back(); // closes onto the first vertex
    if (marked_radius > 0.0) {
        r.marked_disks.push_back({cplx(1.0, 0.0), marked_radius});
        r.marked_disks.push_back({cplx(-1.0, 0.0), marked_radius});
    }
    return r;
}

// Neighborhood of the radius [0,1]: the horizontal strip {Re z > 0, |Im z| < eps}
// inside D, together with the disk of radius eps around 0.  Boundary: top edge
// right-to-left, the left semicircle of radius eps (CCW), bottom edge
// left-to-right, circle arc through 1.
inline Region radial_semicircle_neighborhood(double eps, int resolution = 256,
                                             double marked_radius = 0.0) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("neighborhood size out of range");
    Region r;
    r.chart = Chart::D;
    double xr = std::sqrt(1.0 - eps * eps);
    r.boundary.push_back(cplx(xr, eps));
    r.boundary.push_back(cplx(0.0, eps));
    detail::append_circle_arc(r.boundary, 0.0, eps, kPi / 2, 3.0 * kPi / 2, resolution);
    r.boundary.push_back(cplx(xr, -eps));
    double a = std::asin(eps);
    detail::append_circle_arc(r.boundary, 0.0, 1.0, -a, a, std::max(8, resolution / 8));
    r.boundary.pop_back();
    if (marked_radius > 0.0) {
        r.marked_disks.push_back({cplx(1.0, 0.0), marked_radius});
        r.marked_disks.push_back({cplx(0.0, 0.0), marked_radius});
    }
    return r;
}

// Neighborhood of a general reference curve: all points of D within eps of it.
inline Region tube_neighborhood(const CurvePath& reference, double eps,
                                double marked_radius = 0.0) {
    if (!(eps > 0.0)) throw std::invalid_argument("tube radius must be positive");
    Region r;
    r.chart = reference.chart;
    r.core = reference.pts;
    r.tube_radius = eps;
    if (marked_radius > 0.0) {
        if (!reference.pts.empty()) {
            r.marked_disks.push_back({reference.pts.front(), marked_radius});
            r.marked_disks.push_back({reference.pts.back(), marked_radius});
        }
    }
    return r;
}

inline Region full_disk_region(int resolution = 512) {
    Region r;
    r.chart = Chart::D;
    for (int i = 0; i < resolution; ++i)
        r.boundary.push_back(std::polar(1.0, 2.0 * kPi * i / resolution));
    return r;
}

// region_contains of the module contract
inline bool region_contains(const Region& region, const CurvePath& curve, double clearance) {
    return region.contains_curve(curve, clearance);
}

} // namespace loewner
