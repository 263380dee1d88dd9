#pragma once

// Monte Carlo estimation of Brownian loop-measure masses.
//
// The (unrooted) Brownian loop measure on root z, duration t has density
// dt dA(z) / (2 pi t^2) times the Brownian-bridge law from z to z.  The mass
// of loops staying in D and hitting two disjoint compacts V1, V2 is finite,
// and loops hitting both sets have diameter >= dist(V1,V2), so durations
// below a cutoff t_min contribute a provably tiny mass (Gaussian bridge
// tails).  The estimator samples roots uniformly on a box, durations from
// q(t) = t_min / t^2 on [t_min, inf), and discretized bridges; the
// importance weight is then the constant  area(box) / (2 pi t_min).
//
// Everything is sampled in the disk chart: half-plane inputs are admitted
// only for the full half-plane and are pushed through the Cayley map first,
// which is legitimate because the loop measure is conformally invariant and
// keeps the root box bounded.

#include <array>
#include <atomic>
#include <cstdint>
#include <limits>
#include <thread>
#include <variant>

#include "loewner/region.hpp"
#include "loewner/rng.hpp"

namespace loewner {

struct Estimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::int64_t n_samples = 0;
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
    std::array<double, 4> box{-1.0, 1.0, -1.0, 1.0}; // x_lo, x_hi, y_lo, y_hi
    double bias_bound = 0.0; // upper bound on the mass lost below t_min
    std::uint64_t seed = 0;
};

// Single-pass mean/variance with an associative merge, so sample blocks can
// be reduced in any grouping (thread fan-out) with a deterministic result.
struct MomentAccumulator {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / double(n);
        m2 += d * (x - mean);
    }
    void merge(const MomentAccumulator& o) {
        if (o.n == 0) return;
        if (n == 0) { *this = o; return; }
        double d = o.mean - mean;
        std::int64_t t = n + o.n;
        mean += d * double(o.n) / double(t);
        m2 += o.m2 + d * d * (double(n) * double(o.n) / double(t));
        n = t;
    }
    double std_err() const {
        return n > 1 ? std::sqrt(m2 / double(n - 1) / double(n)) : 0.0;
    }
};

using LoopTarget = std::variant<CurvePath, Region>;

struct LoopParams {
    std::int64_t n_samples = 1000000;
    int bridge_points = 256;
    double t_min = 0.0;                    // 0 = derive from target distance
    const Region* also_within = nullptr;   // extra stay-indicator (restriction tests)
    RngStream stream;
    int threads = 1;
};

// One importance-sampled loop: root uniform on [-1,1]^2, duration from the
// proposal t_min/t^2 on [t_min, inf).  Against the loop measure restricted to
// that window the Radon-Nikodym weight is the constant area/(2 pi t_min).
struct LoopSample {
    cplx root;
    double duration = 0.0;
    std::vector<cplx> path; // closed polyline; front() == back() == root
    double weight = 0.0;
};

namespace detail {

// Segment store with uniform grid buckets; answers "does [a,b] cross any
// stored segment".  Bridges have ~256 segments and most are nowhere near the
// target, so the bbox reject plus bucket walk keeps hit tests cheap.
struct PolylineHitTester {
    std::vector<cplx> seg_a, seg_b;
    double lo_x = 0, lo_y = 0, inv = 0;
    int nx = 0, ny = 0;
    double hi_x = 0, hi_y = 0;
    std::vector<std::vector<int>> bucket;

    void add_polyline(const std::vector<cplx>& pts, bool closed = false) {
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            seg_a.push_back(pts[i]);
            seg_b.push_back(pts[i + 1]);
        }
        if (closed && pts.size() > 2) {
            seg_a.push_back(pts.back());
            seg_b.push_back(pts.front());
        }
    }

    void build() {
        lo_x = lo_y = 1e300;
        hi_x = hi_y = -1e300;
        for (std::size_t i = 0; i < seg_a.size(); ++i) {
            for (cplx z : {seg_a[i], seg_b[i]}) {
                lo_x = std::min(lo_x, z.real());
                hi_x = std::max(hi_x, z.real());
                lo_y = std::min(lo_y, z.imag());
                hi_y = std::max(hi_y, z.imag());
            }
        }
        if (seg_a.empty()) { lo_x = lo_y = 0; hi_x = hi_y = 0; }
        double w = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
        nx = ny = 64;
        inv = nx / (w * (1.0 + 1e-9));
        bucket.assign(std::size_t(nx) * ny, {});
        for (std::size_t i = 0; i < seg_a.size(); ++i)
            cells_of(seg_a[i], seg_b[i], [&](std::size_t c) { bucket[c].push_back(int(i)); });
    }

    template <class Fn>
    void cells_of(cplx a, cplx b, Fn&& fn) const {
        int x0 = std::clamp(int((std::min(a.real(), b.real()) - lo_x) * inv), 0, nx - 1);
        int x1 = std::clamp(int((std::max(a.real(), b.real()) - lo_x) * inv), 0, nx - 1);
        int y0 = std::clamp(int((std::min(a.imag(), b.imag()) - lo_y) * inv), 0, ny - 1);
        int y1 = std::clamp(int((std::max(a.imag(), b.imag()) - lo_y) * inv), 0, ny - 1);
        for (int gy = y0; gy <= y1; ++gy)
            for (int gx = x0; gx <= x1; ++gx) fn(std::size_t(gy) * nx + gx);
    }

    bool crosses(cplx a, cplx b) const {
        if (std::max(a.real(), b.real()) < lo_x || std::min(a.real(), b.real()) > hi_x ||
            std::max(a.imag(), b.imag()) < lo_y || std::min(a.imag(), b.imag()) > hi_y)
            return false;
        bool hit = false;
        cells_of(a, b, [&](std::size_t c) {
            if (hit) return;
            for (int i : bucket[c])
                if (segments_intersect(a, b, seg_a[i], seg_b[i])) { hit = true; return; }
        });
        return hit;
    }

    // is any stored segment within r of the segment [a,b]?
    bool near(cplx a, cplx b, double r) const {
        if (std::max(a.real(), b.real()) < lo_x - r || std::min(a.real(), b.real()) > hi_x + r ||
            std::max(a.imag(), b.imag()) < lo_y - r || std::min(a.imag(), b.imag()) > hi_y + r)
            return false;
        cplx lo_corner(std::min(a.real(), b.real()) - r, std::min(a.imag(), b.imag()) - r);
        cplx hi_corner(std::max(a.real(), b.real()) + r, std::max(a.imag(), b.imag()) + r);
        bool found = false;
        cells_of(lo_corner, hi_corner, [&](std::size_t c) {
            if (found) return;
            for (int i : bucket[c]) {
                if (segments_intersect(a, b, seg_a[i], seg_b[i]) ||
                    dist_point_segment(seg_a[i], a, b) <= r ||
                    dist_point_segment(seg_b[i], a, b) <= r ||
                    dist_point_segment(a, seg_a[i], seg_b[i]) <= r ||
                    dist_point_segment(b, seg_a[i], seg_b[i]) <= r) {
                    found = true;
                    return;
                }
            }
        });
        return found;
    }
};

// One prepared target: crossing tester over its geometry, plus a containment
// raster when the target is a region (a loop can sit inside a fat region
// without crossing its boundary).
struct PreparedTarget {
    PolylineHitTester tester;
    const Region* region = nullptr;
    RegionRaster raster;
    std::vector<cplx> geometry; // for distance computations

    void prepare(const LoopTarget& t) {
        if (const CurvePath* c = std::get_if<CurvePath>(&t)) {
            if (c->pts.size() < 2)
                throw std::invalid_argument("curve target needs at least two vertices");
            tester.add_polyline(c->pts);
            geometry = c->pts;
        } else {
            region = &std::get<Region>(t);
            if (region->is_tube())
                throw std::invalid_argument("tube regions are not supported as loop targets");
            if (region->boundary.size() < 3)
                throw std::invalid_argument("region target needs a boundary polygon");
            tester.add_polyline(region->boundary, /*closed=*/true);
            geometry = region->boundary;
            raster = RegionRaster(*region, 0.0);
        }
        tester.build();
    }

    // A coarse polyline misses crossings whose excursion fits between grid
    // points, which biases hitting probabilities by O(sqrt(dt)).  Near the
    // target we therefore refine the bridge by exact midpoint sampling
    // (conditional law between fixed endpoints: N(midpoint, dt/4 per
    // coordinate)), pruning branches whose chord is farther than a Gaussian
    // sup-tail radius.  Draws are keyed by (sample, step, tree node), never
    // by traversal order, so refinement is reproducible and identical across
    // target sets; enlarging a target can only add detected crossings.
    static constexpr double kTriggerSigmas = 3.5;
    static constexpr int kMaxRefineDepth = 12;

    bool refine(const RngStream& base, std::uint64_t step, std::uint64_t node, cplx a, cplx b,
                double dt, int depth) const {
        if (!tester.near(a, b, kTriggerSigmas * std::sqrt(dt))) return false;
        if (depth >= kMaxRefineDepth) return false;
        RngStream ns = base.child((step << 20) | node);
        cplx mid = 0.5 * (a + b) +
                   0.5 * std::sqrt(dt) * cplx(ns.next_gaussian(), ns.next_gaussian());
        if (region && raster.contains(mid)) return true;
        if (tester.crosses(a, mid) || tester.crosses(mid, b)) return true;
        return refine(base, step, 2 * node, a, mid, 0.5 * dt, depth + 1) ||
               refine(base, step, 2 * node + 1, mid, b, 0.5 * dt, depth + 1);
    }

    // path[0..count-1] is a closed loop (the segment count-1 -> 0 included);
    // dt is the coarse step duration, refine_base the per-sample stream
    bool hit(const std::vector<cplx>& path, std::size_t count, double dt,
             const RngStream& refine_base) const {
        if (region) {
            for (std::size_t k = 0; k < count; ++k)
                if (raster.contains(path[k])) return true;
        }
        for (std::size_t k = 0; k < count; ++k) {
            cplx a = path[k], b = path[(k + 1) % count];
            if (tester.crosses(a, b)) return true;
            if (refine(refine_base, k, 1, a, b, dt, 0)) return true;
        }
        return false;
    }
};

inline double dist_polyline_polyline(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = std::numeric_limits<double>::infinity();
    auto seg_seg = [&](cplx p, cplx q, cplx r, cplx s) {
        if (segments_intersect(p, q, r, s)) return 0.0;
        return std::min(std::min(dist_point_segment(p, r, s), dist_point_segment(q, r, s)),
                        std::min(dist_point_segment(r, p, q), dist_point_segment(s, p, q)));
    };
    for (std::size_t i = 0; i + 1 < a.size() || (a.size() == 1 && i == 0); ++i) {
        cplx p = a[i], q = a[std::min(i + 1, a.size() - 1)];
        for (std::size_t j = 0; j + 1 < b.size() || (b.size() == 1 && j == 0); ++j) {
            cplx r = b[j], s = b[std::min(j + 1, b.size() - 1)];
            d = std::min(d, seg_seg(p, q, r, s));
        }
    }
    return d;
}

inline cplx cayley_to_disk(cplx z) { return (z - cplx(0, 1)) / (z + cplx(0, 1)); }

inline CurvePath curve_to_disk_chart(const CurvePath& c) {
    if (c.chart == Chart::D) return c;
    CurvePath out;
    out.chart = Chart::D;
    out.pts.reserve(c.pts.size());
    for (cplx z : c.pts) out.pts.push_back(cayley_to_disk(z));
    for (const auto& [k, v] : c.marked) out.marked[k] = cayley_to_disk(v);
    return out;
}

inline Region region_to_disk_chart(const Region& r) {
    if (r.chart == Chart::D) return r;
    if (r.is_tube())
        throw std::invalid_argument("tube regions cannot be transported between charts");
    Region out;
    out.chart = Chart::D;
    out.complement = r.complement;
    out.boundary.reserve(r.boundary.size());
    for (cplx z : r.boundary) out.boundary.push_back(cayley_to_disk(z));
    return out;
}

inline LoopTarget target_to_disk_chart(const LoopTarget& t) {
    if (const CurvePath* c = std::get_if<CurvePath>(&t)) return curve_to_disk_chart(*c);
    return region_to_disk_chart(std::get<Region>(t));
}

inline bool region_is_full_chart(const Region& r) {
    return r.boundary.empty() && !r.is_tube() && r.complement;
}

// Discrete Brownian bridge from root back to root: cumulative Gaussian walk
// minus the linear drift that closes it.  The grid marginals have the exact
// bridge covariance (s (t-s) / t per coordinate).  Fills path[0..m-1]; the
// closing vertex (== root) is implicit.  Always consumes the same number of
// stream values, so loops are reproducible across target configurations.
// sample_loop and the estimator's inner loop share this generation sequence.
inline void fill_bridge(RngStream& s, cplx root, double t, int m, std::vector<cplx>& path) {
    double sigma = std::sqrt(t / m);
    cplx sum = 0.0;
    path[0] = 0.0;
    for (int k = 1; k < m; ++k) {
        sum += cplx(sigma * s.next_gaussian(), sigma * s.next_gaussian());
        path[std::size_t(k)] = sum;
    }
    sum += cplx(sigma * s.next_gaussian(), sigma * s.next_gaussian());
    for (int k = 0; k < m; ++k)
        path[std::size_t(k)] = root + path[std::size_t(k)] - (double(k) / m) * sum;
}

// Core driver: average value(path) * weight over sampled loops.  Samples are
// consumed in fixed blocks with per-block child streams and merged in block
// order, so the result is independent of the thread count.
template <class Value>
Estimate run_loop_estimator(const Region& domain, const LoopParams& params, double t_min,
                            double bias_bound, Value&& value) {
    if (!(t_min > 0.0)) throw std::invalid_argument("loop duration window is degenerate");
    const double area = 4.0;
    const double weight = area / (2.0 * kPi * t_min);
    const int m = params.bridge_points;
    if (m < 8) throw std::invalid_argument("bridge needs at least 8 points");
    const std::int64_t block = 8192;
    const std::int64_t n_blocks = (params.n_samples + block - 1) / block;

    RegionRaster domain_raster(domain, 0.0);
    RegionRaster extra_raster;
    if (params.also_within) {
        if (params.also_within->chart != Chart::D)
            throw std::invalid_argument("extra containment region must be in the disk chart");
        extra_raster = RegionRaster(*params.also_within, 0.0);
    }

    std::vector<MomentAccumulator> acc(static_cast<std::size_t>(n_blocks));
    const RngStream refine_root = params.stream.child("refine");
    auto run_block = [&](std::int64_t b, std::vector<cplx>& path) {
        RngStream s = params.stream.child(std::uint64_t(b));
        std::int64_t lo = b * block;
        std::int64_t hi = std::min(lo + block, params.n_samples);
        MomentAccumulator& a = acc[std::size_t(b)];
        for (std::int64_t i = lo; i < hi; ++i) {
            cplx root(2.0 * s.next_double() - 1.0, 2.0 * s.next_double() - 1.0);
            double t = t_min / s.next_double_pos();
            fill_bridge(s, root, t, m, path);
            bool inside = true;
            for (int k = 0; k < m; ++k) {
                if (!domain_raster.contains(path[std::size_t(k)]) ||
                    (params.also_within && !extra_raster.contains(path[std::size_t(k)]))) {
                    inside = false;
                    break;
                }
            }
            double v = 0.0;
            if (inside) {
                RngStream rs = refine_root.child(std::uint64_t(i));
                v = weight * value(path, std::size_t(m), t / m, rs);
            }
            a.add(v);
        }
    };

    int threads = std::max(1, params.threads);
    if (threads == 1) {
        std::vector<cplx> path(static_cast<std::size_t>(m));
        for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b, path);
    } else {
        std::atomic<std::int64_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                std::vector<cplx> path(static_cast<std::size_t>(m));
                for (std::int64_t b; (b = next.fetch_add(1)) < n_blocks;) run_block(b, path);
            });
        for (auto& th : pool) th.join();
    }

    MomentAccumulator total;
    for (const auto& a : acc) total.merge(a);
    Estimate est;
    est.mean = total.mean;
    est.std_err = total.std_err();
    est.n_samples = total.n;
    est.t_min = t_min;
    est.bias_bound = bias_bound;
    est.seed = params.stream.key;
    return est;
}

struct TwoSetValue {
    const PreparedTarget* t1;
    const PreparedTarget* t2;
    double operator()(const std::vector<cplx>& path, std::size_t count, double dt,
                      const RngStream& rs) const {
        return (t1->hit(path, count, dt, rs) && t2->hit(path, count, dt, rs)) ? 1.0 : 0.0;
    }
};

// precondition from the mass definition: targets live in (the closure of)
// the domain; chart-boundary points are allowed since chords end there
inline void require_target_in_domain(const std::vector<cplx>& geometry, const Region& domain) {
    for (cplx z : geometry) {
        bool on_rim = domain.chart == Chart::D ? std::abs(std::abs(z) - 1.0) <= 1e-9
                                               : std::abs(z.imag()) <= 1e-9;
        if (!on_rim && !domain.contains_point(z, 0.0))
            throw std::invalid_argument("loop-mass targets must lie inside the domain");
    }
}

} // namespace detail

// Draw one loop from the proposal (same draw sequence as the estimator's
// inner loop): root uniform on [-1,1]^2, duration t_min/uniform, bridge with
// `m` steps.  The closing vertex is appended so front() == back() == root.
inline LoopSample sample_loop(RngStream& s, double t_min, int m) {
    if (!(t_min > 0.0)) throw std::invalid_argument("loop duration window is degenerate");
    if (m < 8) throw std::invalid_argument("bridge needs at least 8 points");
    LoopSample out;
    out.root = cplx(2.0 * s.next_double() - 1.0, 2.0 * s.next_double() - 1.0);
    out.duration = t_min / s.next_double_pos();
    out.weight = 4.0 / (2.0 * kPi * t_min);
    out.path.resize(static_cast<std::size_t>(m) + 1);
    detail::fill_bridge(s, out.root, out.duration, m, out.path);
    out.path[static_cast<std::size_t>(m)] = out.root;
    return out;
}

// Mass of Brownian loops staying in `domain` and hitting both targets.
// Loops below t_min (default (dist/8)^2) are dropped; the reported
// bias_bound = (8 A / (pi d^2)) exp(-d^2 / (4 t_min)) bounds the loss via
// the exact one-sided bridge maximum law P(sup >= r) = exp(-2 r^2 / t).
inline Estimate loop_mass_two_sets(const LoopTarget& v1_in, const LoopTarget& v2_in,
                                   const Region& domain_in, const LoopParams& params) {
    Region domain = domain_in;
    LoopTarget v1 = v1_in, v2 = v2_in;
    if (domain_in.chart == Chart::H) {
        if (!detail::region_is_full_chart(domain_in))
            throw std::invalid_argument(
                "half-plane loop masses are computed through the Cayley map; "
                "pass the full half-plane as the domain");
        domain = Region{};
        domain.chart = Chart::D;
        domain.complement = true; // whole disk
        v1 = detail::target_to_disk_chart(v1_in);
        v2 = detail::target_to_disk_chart(v2_in);
    }
    auto chart_of = [](const LoopTarget& t) {
        return std::holds_alternative<CurvePath>(t) ? std::get<CurvePath>(t).chart
                                                    : std::get<Region>(t).chart;
    };
    if (chart_of(v1) != domain.chart || chart_of(v2) != domain.chart)
        throw std::invalid_argument("loop-mass targets must live in the domain's chart");

    detail::PreparedTarget t1, t2;
    t1.prepare(v1);
    t2.prepare(v2);
    detail::require_target_in_domain(t1.geometry, domain);
    detail::require_target_in_domain(t2.geometry, domain);
    double d = detail::dist_polyline_polyline(t1.geometry, t2.geometry);
    if (!(d > 0.0)) throw std::invalid_argument("loop-mass targets must be disjoint");
    double t_min = params.t_min > 0.0 ? params.t_min : (d / 8.0) * (d / 8.0);
    double bias = (8.0 * 4.0 / (kPi * d * d)) * std::exp(-d * d / (4.0 * t_min));
    return detail::run_loop_estimator(domain, params, t_min, bias,
                                      detail::TwoSetValue{&t1, &t2});
}

// Mass-weighted crossing count: integral of max(#curves hit - 1, 0) over the
// loop measure.  This is the loop term of the multi-chord potential.
inline Estimate multi_cross_mass(const std::vector<CurvePath>& curves_in, const Region& domain_in,
                                 const LoopParams& params) {
    if (curves_in.empty()) throw std::invalid_argument("multi_cross_mass needs curves");
    Region domain = domain_in;
    std::vector<CurvePath> curves = curves_in;
    if (domain_in.chart == Chart::H) {
        if (!detail::region_is_full_chart(domain_in))
            throw std::invalid_argument(
                "half-plane loop masses are computed through the Cayley map; "
                "pass the full half-plane as the domain");
        domain = Region{};
        domain.chart = Chart::D;
        domain.complement = true;
        for (auto& c : curves) c = detail::curve_to_disk_chart(c);
    }
    for (const auto& c : curves)
        if (c.chart != domain.chart)
            throw std::invalid_argument("multi-cross curves must live in the domain's chart");

    std::vector<detail::PreparedTarget> targets(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        targets[i].prepare(LoopTarget{curves[i]});
        detail::require_target_in_domain(targets[i].geometry, domain);
    }

    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < curves.size(); ++i)
        for (std::size_t j = i + 1; j < curves.size(); ++j)
            d = std::min(d, detail::dist_polyline_polyline(targets[i].geometry,
                                                           targets[j].geometry));
    if (curves.size() >= 2 && !(d > 0.0))
        throw std::invalid_argument("multi-cross curves must be disjoint");

    double t_min = params.t_min;
    double bias = 0.0;
    if (curves.size() == 1) {
        if (t_min <= 0.0) t_min = 1e-4; // value is identically zero; window immaterial
    } else {
        if (t_min <= 0.0) t_min = (d / 8.0) * (d / 8.0);
        // a loop must link two distinct curves to contribute
        bias = (8.0 * 4.0 / (kPi * d * d)) * std::exp(-d * d / (4.0 * t_min));
    }

    auto value = [&](const std::vector<cplx>& path, std::size_t count, double dt,
                     const RngStream& rs) {
        int cnt = 0;
        for (const auto& t : targets)
            if (t.hit(path, count, dt, rs)) ++cnt;
        return double(std::max(cnt - 1, 0));
    };
    return detail::run_loop_estimator(domain, params, t_min, bias, value);
}

// The whole canonical domain of a chart as a Region (empty polygon,
// complement flag): membership is exactly the chart test.
inline Region chart_domain_region(Chart c) {
    Region r;
    r.chart = c;
    r.complement = true;
    return r;
}

} // namespace loewner
