#pragma once

// Sampling of SLE_kappa and SLE_kappa(rho) driving functions and traces, plus
// the neighborhood-stay estimator behind the measure-ratio experiments.
//
// The driving is sqrt(kappa) times Brownian motion on a uniform grid; forced
// variants add the Euler-Maruyama drift of the standard SLE_kappa(rho) SDE,
//     dW = sqrt(kappa) dB + rho/(W-V) dt            (chordal)
//     dW = sqrt(kappa) dB + (rho/2) cot((W-V)/2) dt (radial)
// with the force point V carried by the Loewner flow.  The deterministic
// kappa = 0 flow of this drift is exactly the zero of the forced energies, so
// the sampler and the quadrature validate each other.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "loewner/loewner.hpp"
#include "loewner/loopsoup.hpp"
#include "loewner/region.hpp"
#include "loewner/rng.hpp"

namespace loewner {

enum class SwallowPolicy { Reflect, Reject };

struct SamplerConfig {
    double kappa = 2.0;
    std::optional<double> rho;
    DrivingFunction::Kind kind = DrivingFunction::Kind::Chordal;
    double T = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    std::size_t n_paths = 1;
    // force-point start: position (chordal) or angle (radial); when absent the
    // force point starts at the driving start, the singular configuration
    std::optional<double> force_point;
    int force_side = +1;
    SwallowPolicy policy = SwallowPolicy::Reflect;

    void validate() const {
        if (!(kappa >= 0.0 && kappa <= 4.0))
            throw std::invalid_argument("kappa must lie in [0, 4]");
        if (rho && !(*rho > -2.0)) throw std::invalid_argument("rho must exceed -2");
        if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
        if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
        if (force_side != 1 && force_side != -1)
            throw std::invalid_argument("force_side must be +1 or -1");
    }
};

// counts of the near-swallowing interventions taken while sampling one path
struct SampleInfo {
    long subdivided_steps = 0;
    long reflections = 0;
};

// drift of the forced driving SDE as a function of W - V; isolated here so the
// sampler, the energies, and the verifier all share one definition
inline double sle_drift(DrivingFunction::Kind kind, double rho, double w_minus_v) {
    if (kind == DrivingFunction::Kind::Chordal) return rho / w_minus_v;
    return 0.5 * rho / std::tan(0.5 * w_minus_v);
}

// Loewner flow of the force point as a function of V - W
inline double force_flow(DrivingFunction::Kind kind, double v_minus_w) {
    if (kind == DrivingFunction::Kind::Chordal) return 2.0 / v_minus_w;
    return 1.0 / std::tan(0.5 * v_minus_w);
}

inline DrivingFunction sample_driving(const SamplerConfig& cfg, RngStream stream,
                                      SampleInfo* info = nullptr) {
    cfg.validate();
    std::size_t n = std::size_t(std::ceil(cfg.T / cfg.dt - 1e-12));
    if (n < 1) n = 1;
    double h = cfg.T / double(n);
    double s = std::sqrt(cfg.kappa * h);

    DrivingFunction d;
    d.kind = cfg.kind;
    d.t.resize(n + 1);
    d.w.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) d.t[k] = cfg.T * double(k) / double(n);
    d.w[0] = 0.0;

    if (!cfg.rho) {
        for (std::size_t k = 0; k < n; ++k) d.w[k + 1] = d.w[k] + s * stream.next_gaussian();
        return d;
    }

    double rho = *cfg.rho;
    double w = 0.0, v;
    int side;
    std::size_t k0 = 0;
    if (!cfg.force_point || *cfg.force_point == 0.0) {
        // singular start: the gap collapses like sqrt(t) toward 0, where no
        // Euler step from the seed survives.  Cross the first cell on the
        // exact self-similar flow
        //   W = w* sqrt(t),  V - W = side x* sqrt(t)
        // (the kappa = 0 solution of this seed) and add the cell's noise
        // increment at the end.
        side = cfg.force_side;
        double ws = -side * rho * std::sqrt(2.0 / (rho + 2.0));
        double xs = side * std::sqrt(2.0 * (rho + 2.0));
        w = ws * std::sqrt(d.t[1]) + s * stream.next_gaussian();
        v = w + xs * std::sqrt(d.t[1]);
        d.w[1] = w;
        k0 = 1;
    } else {
        v = *cfg.force_point;
        side = v > 0.0 ? +1 : -1;
    }

    // singular velocities at near-contact gaps would send one RK4 stage across
    // the force point; cap any stage displacement at a quarter of the gap, so
    // the drift alone can only approach geometrically.  Inactive in healthy
    // regimes, and an exact 0.0 at rho = 0 (clamp of 0 is 0).
    auto capped = [](double vel, double gap, double hh) {
        double cap = 0.25 * std::abs(gap) / hh;
        return std::clamp(vel, -cap, cap);
    };
    // one substep: the noise fraction, then one RK4 step of the joint drift
    // ODE  w' = drift(w - v), v' = flow(v - w)
    auto advance = [&](double& wc, double& vc, double noise, double hh) {
        wc += noise;
        double dw1 = capped(sle_drift(cfg.kind, rho, wc - vc), wc - vc, hh);
        double dv1 = capped(force_flow(cfg.kind, vc - wc), wc - vc, hh);
        double wa = wc + 0.5 * hh * dw1, va = vc + 0.5 * hh * dv1;
        double dw2 = capped(sle_drift(cfg.kind, rho, wa - va), wa - va, hh);
        double dv2 = capped(force_flow(cfg.kind, va - wa), wa - va, hh);
        double wb = wc + 0.5 * hh * dw2, vb = vc + 0.5 * hh * dv2;
        double dw3 = capped(sle_drift(cfg.kind, rho, wb - vb), wb - vb, hh);
        double dv3 = capped(force_flow(cfg.kind, vb - wb), wb - vb, hh);
        double wd = wc + hh * dw3, vd = vc + hh * dv3;
        double dw4 = capped(sle_drift(cfg.kind, rho, wd - vd), wd - vd, hh);
        double dv4 = capped(force_flow(cfg.kind, vd - wd), wd - vd, hh);
        wc += hh / 6.0 * (dw1 + 2.0 * dw2 + 2.0 * dw3 + dw4);
        vc += hh / 6.0 * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4);
    };
    const double eps_f = 1e-6;
    auto contact = [&](double wc, double vc) {
        double gap = wc - vc;
        return !std::isfinite(gap) || std::abs(gap) < eps_f || gap * side > 0.0;
    };

    for (std::size_t k = k0; k < n; ++k) {
        double dB = s * stream.next_gaussian();
        double span = d.t[k + 1] - d.t[k];
        int m = 1;
        if (rho != 0.0) {
            // substep count proportional to stiffness: the fraction of the
            // gap the drift would cross in one step (near-singular cells of a
            // fresh singular start need this; settled gaps stay at m = 1)
            double stiff = std::abs(sle_drift(cfg.kind, rho, w - v)) * span / std::abs(w - v);
            m = std::isfinite(stiff) ? std::clamp(int(std::ceil(64.0 * stiff)), 1, 64) : 64;
        }
        // first pass at m substeps, one retry at 16m ("subdivide before any
        // rejection"); each attempt reruns the whole step, reusing the same
        // noise increment, so nothing is drawn or committed twice
        bool ok = false;
        for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
            double wc = w, vc = v;
            double hh = span / m;
            ok = true;
            for (int i = 0; i < m && ok; ++i) {
                if (rho != 0.0 && contact(wc, vc)) ok = false;
                else advance(wc, vc, dB / m, hh);
            }
            if (ok && rho != 0.0 && contact(wc, vc)) ok = false; // flip on the last substep
            if (ok) {
                w = wc;
                v = vc;
            } else if (attempt == 0) {
                m *= 16;
                if (info) ++info->subdivided_steps;
            }
        }
        if (!ok) {
            if (cfg.policy == SwallowPolicy::Reject) throw SwallowedError(d.t[k]);
            // reflect-at-eps: rerun the step holding V at distance eps_f on
            // its own side whenever the gap closes; all noise still applies
            double wc = w, vc = v;
            double hh = span / m;
            for (int i = 0; i < m; ++i) {
                if (contact(wc, vc)) {
                    vc = wc + side * eps_f;
                    if (info) ++info->reflections;
                }
                advance(wc, vc, dB / m, hh);
            }
            if (contact(wc, vc)) {
                vc = wc + side * eps_f;
                if (info) ++info->reflections;
            }
            w = wc;
            v = vc;
        }
        d.w[k + 1] = w;
    }
    return d;
}

inline DrivingFunction sample_driving(const SamplerConfig& cfg, SampleInfo* info = nullptr) {
    return sample_driving(cfg, RngStream(cfg.seed).child("driving"), info);
}

inline TraceResult sample_trace(const SamplerConfig& cfg, RngStream stream,
                                SampleInfo* info = nullptr) {
    DrivingFunction d = sample_driving(cfg, stream, info);
    return cfg.kind == DrivingFunction::Kind::Chordal ? chordal_trace(d) : radial_trace(d);
}

inline TraceResult sample_trace(const SamplerConfig& cfg, SampleInfo* info = nullptr) {
    return sample_trace(cfg, RngStream(cfg.seed).child("driving"), info);
}

namespace detail {

// H -> D boundary chart used when chordal traces are tested against disk
// regions: 0 -> 1, infinity -> -1, i -> 0
inline Mobius half_plane_to_disk() { return disk_chart().inverse(); }

inline bool region_admits_point(const Region& r, cplx p, double clearance) {
    return r.in_marked_disk(p) || r.contains_point(p, 0.0) ||
           r.boundary_distance(p) <= std::max(clearance, 1e-2);
}

} // namespace detail

// Fraction of sampled traces staying inside `region` with the given clearance.
// Identical seeds give identical paths, so estimates for nested regions are
// monotone sample by sample, not merely in distribution.
inline Estimate estimate_stay_probability(const SamplerConfig& cfg, const Region& region,
                                          double clearance) {
    cfg.validate();
    Chart native = cfg.kind == DrivingFunction::Kind::Chordal ? Chart::H : Chart::D;
    bool map_to_disk = false;
    if (region.chart != native) {
        if (native != Chart::H)
            throw std::invalid_argument("radial stay regions must live in the disk chart");
        map_to_disk = true; // chordal traces are tested through the boundary chart
    }
    Mobius chart_map = detail::half_plane_to_disk();

    // the configuration's marked points, expressed in the region's chart
    std::vector<cplx> marked;
    if (cfg.kind == DrivingFunction::Kind::Chordal) {
        if (map_to_disk) {
            marked.push_back(cplx(1.0, 0.0));  // driving start
            marked.push_back(cplx(-1.0, 0.0)); // infinity
        } else {
            marked.push_back(cplx(0.0, 0.0));
        }
    } else {
        marked.push_back(cplx(1.0, 0.0)); // e^{i 0}, the driving start
        marked.push_back(cplx(0.0, 0.0)); // the interior target
    }
    for (cplx p : marked)
        if (!detail::region_admits_point(region, p, clearance))
            throw std::invalid_argument("region does not contain the configuration's marked points");

    // every trace touches its marked endpoints on the chart edge, where no
    // positive clearance can be met; grant them a fixed pass radius so the
    // stay event measures the curve's behavior away from its forced contacts
    Region reg = region;
    double pass = std::max(2.0 * clearance, 0.02);
    for (cplx p : marked) reg.marked_disks.push_back({p, pass});
    RegionRaster raster(reg, clearance);
    RngStream root = RngStream(cfg.seed).child("stay");
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        TraceResult tr = sample_trace(cfg, root.child(std::uint64_t(i)));
        CurvePath c = tr.curve;
        if (map_to_disk) {
            c.chart = Chart::D;
            for (cplx& z : c.pts) z = chart_map.apply(z);
        }
        if (raster.contains_curve(c)) ++hits;
    }
    double p = double(hits) / double(cfg.n_paths);
    Estimate e;
    e.mean = p;
    e.std_err = std::sqrt(p * (1.0 - p) / double(cfg.n_paths));
    e.n_samples = std::int64_t(cfg.n_paths);
    e.seed = cfg.seed;
    e.t_min = 0.0;
    e.t_max = 0.0;
    e.box = {0.0, 0.0, 0.0, 0.0};
    return e;
}

} // namespace loewner
