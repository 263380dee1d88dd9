#pragma once

// Conformal building blocks: primitive maps with analytic derivatives up to
// third order, and MapChain, an ordered composition of primitives (each step
// optionally inverted).  Chains are how every conformal map in the library is
// represented: Loewner zipper solutions, disk uniformizers, deformation maps.
//
// Branch conventions (the part that actually takes care):
//  * vertical-slit "up" map (removes the slit [b, b+i*sqrt(c)] from H):
//        f(z) = b + w*sqrt(1 + c/w^2),  w = z-b.
//    The principal square root of 1 + c/w^2 is cut exactly on the slit
//    (w^2 in [-c,0)), so this form is analytic on all of H \ slit and has the
//    right sign on both real half-axes.
//  * vertical-slit "down" map (welds the slit):
//        f(z) = b + sqrt(w - sqrt(c)) * sqrt(w + sqrt(c)),
//    a product of principal roots; each factor maps H into the first quadrant,
//    so the product is analytic on H and the interval (-sqrt c, sqrt c) lands
//    on the upper side of the slit.
//  * tilted-slit "down" map (welds a straight slit of angle pi*alpha):
//        h(w) = (w + alpha*s)^(1-alpha) * (w - (1-alpha)*s)^alpha,
//    principal powers; hydrodynamically normalized by construction.
//    Half-plane capacity alpha*(1-alpha)*s^2/4, driving increment (1-2alpha)s,
//    tip s * alpha^alpha (1-alpha)^(1-alpha) e^{i pi alpha}.
//    Its inverse has no closed form and is evaluated by a damped Newton
//    iteration on log h.

#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

namespace loewner {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct Jet3 {
    cplx f, f1, f2, f3;
};

// jet of (outer ∘ inner): outer must be evaluated at inner.f
inline Jet3 compose(const Jet3& o, const Jet3& g) {
    Jet3 r;
    r.f  = o.f;
    r.f1 = o.f1 * g.f1;
    r.f2 = o.f2 * g.f1 * g.f1 + o.f1 * g.f2;
    r.f3 = o.f3 * g.f1 * g.f1 * g.f1 + 3.0 * o.f2 * g.f1 * g.f2 + o.f1 * g.f3;
    return r;
}

// derivatives of the inverse map at f(z), from the jet of f at z
inline Jet3 invert_jet(const Jet3& j, cplx preimage) {
    Jet3 r;
    r.f  = preimage;
    r.f1 = 1.0 / j.f1;
    r.f2 = -j.f2 / (j.f1 * j.f1 * j.f1);
    cplx f1sq = j.f1 * j.f1;
    r.f3 = (3.0 * j.f2 * j.f2 - j.f1 * j.f3) / (f1sq * f1sq * j.f1);
    return r;
}

inline cplx schwarzian_of(const Jet3& j) {
    cplx q = j.f2 / j.f1;
    return j.f3 / j.f1 - 1.5 * q * q;
}

// ---------------------------------------------------------------------------
// Mobius
// ---------------------------------------------------------------------------

struct Mobius {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    cplx det() const { return a * d - b * c; }

    cplx apply(cplx z) const { return (a * z + b) / (c * z + d); }

    Jet3 jet(cplx z) const {
        cplx den = c * z + d;
        cplx dt = det();
        Jet3 r;
        r.f  = (a * z + b) / den;
        r.f1 = dt / (den * den);
        r.f2 = -2.0 * c * dt / (den * den * den);
        r.f3 = 6.0 * c * c * dt / (den * den * den * den);
        return r;
    }

    Mobius inverse() const { return Mobius{d, -b, -c, a}; }

    // matrix product: (m ∘ this)(z) = m(this(z))
    Mobius after(const Mobius& m) const {
        return Mobius{m.a * a + m.b * c, m.a * b + m.b * d,
                      m.c * a + m.d * c, m.c * b + m.d * d};
    }

    static Mobius identity() { return Mobius{}; }
    static Mobius translation(cplx t) { return Mobius{1.0, t, 0.0, 1.0}; }
    static Mobius scaling(cplx s) { return Mobius{s, 0.0, 0.0, 1.0}; }
    // rotation of the disk about 0
    static Mobius rotation(double theta) { return scaling(std::polar(1.0, theta)); }
    // H -> D, i |-> 0, 0 |-> -1, infinity |-> 1
    static Mobius cayley() { return Mobius{1.0, cplx(0.0, -1.0), 1.0, cplx(0.0, 1.0)}; }
    // D -> H, inverse of the above
    static Mobius cayley_inv() { return cayley().inverse(); }
    // D -> H sending boundary points x = e^{ia} -> 0, y = e^{ib} -> infinity.
    // The unimodular factor k = s e^{i(b-a)/2} (s = sign sin((a-b)/2)) turns
    // the image line into R with the disk landing on the upper side.
    static Mobius disk_to_h(cplx x, cplx y) {
        double a = std::arg(x), b = std::arg(y);
        double s = std::sin(0.5 * (a - b)) >= 0.0 ? 1.0 : -1.0;
        cplx k = s * std::polar(1.0, 0.5 * (b - a));
        return Mobius{k, -k * x, 1.0, -y};
    }
};

// ---------------------------------------------------------------------------
// Vertical slit
// ---------------------------------------------------------------------------

struct VSlit {
    double base = 0.0; // foot of the slit on R
    double c = 0.0;    // slit is [base, base + i*sqrt(c)], half-plane capacity c/4

    static VSlit from_capacity(double base, double hcap) { return VSlit{base, 4.0 * hcap}; }
    double hcap() const { return 0.25 * c; }
    double height() const { return std::sqrt(c); }

    // removes the slit: H \ slit -> H
    Jet3 jet_up(cplx z) const {
        cplx w = z - base;
        cplx f;
        if (std::norm(w) > 4.0 * c) {
            f = w * std::sqrt(1.0 + c / (w * w)); // cut only on the slit
        } else if (w == 0.0) {
            f = cplx(std::sqrt(c), 0.0); // convention: the right prime end of the foot
        } else {
            // same branch, but near the tip the sum 1 + c/w^2 cancels; form it
            // as the factored product ((w-ir)(w+ir))/w^2, which has the same
            // principal-root cut (exactly the slit) without the cancellation
            double r = std::sqrt(c);
            cplx q = ((w - cplx(0.0, r)) / w) * ((w + cplx(0.0, r)) / w);
            f = w * std::sqrt(q);
        }
        Jet3 r;
        r.f = base + f;
        if (f == 0.0) { // exactly at the tip: derivative blows up
            r.f1 = r.f2 = r.f3 = cplx(std::numeric_limits<double>::infinity(), 0.0);
            return r;
        }
        r.f1 = w / f;
        r.f2 = c / (f * f * f);
        r.f3 = -3.0 * c * w / (f * f * f * f * f);
        return r;
    }

    // welds the slit: H -> H \ slit
    Jet3 jet_down(cplx z) const {
        cplx w = z - base;
        double r = std::sqrt(c);
        cplx f = std::sqrt(w - r) * std::sqrt(w + r);
        Jet3 out;
        out.f = base + f;
        out.f1 = (f == 0.0) ? cplx(std::numeric_limits<double>::infinity(), 0.0) : w / f;
        out.f2 = (f == 0.0) ? out.f1 : -c / (f * f * f);
        out.f3 = (f == 0.0) ? out.f1 : 3.0 * c * w / (f * f * f * f * f);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Tilted slit
// ---------------------------------------------------------------------------

struct TiltedSlit {
    double base = 0.0;
    double alpha = 0.5; // slit angle is pi*alpha, measured from R+
    double s = 0.0;     // scale; p = alpha*s, q = (1-alpha)*s

    double p() const { return alpha * s; }
    double q() const { return (1.0 - alpha) * s; }
    double hcap() const { return alpha * (1.0 - alpha) * s * s * 0.25; }
    double dw() const { return (1.0 - 2.0 * alpha) * s; }
    cplx tip_rel() const {
        return std::polar(s * std::pow(alpha, alpha) * std::pow(1.0 - alpha, 1.0 - alpha),
                          kPi * alpha);
    }

    // capacity increment dt > 0 and driving increment dw determine the slit:
    //   u = dw / sqrt(16 dt + dw^2),  alpha = (1-u)/2,  s = sqrt(16 dt + dw^2)
    static TiltedSlit from_increment(double base, double dw, double dt) {
        double s = std::sqrt(16.0 * dt + dw * dw);
        double u = (s == 0.0) ? 0.0 : dw / s;
        return TiltedSlit{base, 0.5 * (1.0 - u), s};
    }

    // slit whose tip is exactly the given point (relative to base), used by the
    // tilted-family unzipper
    static TiltedSlit from_tip(double base, cplx tip) {
        double alpha = std::arg(tip) / kPi;
        alpha = std::min(std::max(alpha, 1e-12), 1.0 - 1e-12);
        double s = std::abs(tip) /
                   (std::pow(alpha, alpha) * std::pow(1.0 - alpha, 1.0 - alpha));
        return TiltedSlit{base, alpha, s};
    }

    // welds the slit: H -> H \ slit (principal powers; cuts lie on R)
    Jet3 jet_down(cplx z) const {
        cplx w = z - base;
        cplx A = w + p(), B = w - q();
        cplx f = std::pow(A, 1.0 - alpha) * std::pow(B, alpha);
        Jet3 r;
        r.f = base + f;
        // log-derivatives: L1 = h'/h etc.
        cplx l1 = (1.0 - alpha) / A + alpha / B;
        cplx l2 = -(1.0 - alpha) / (A * A) - alpha / (B * B);
        cplx l3 = 2.0 * (1.0 - alpha) / (A * A * A) + 2.0 * alpha / (B * B * B);
        r.f1 = f * l1;
        r.f2 = f * (l1 * l1 + l2);
        r.f3 = f * (l1 * l1 * l1 + 3.0 * l1 * l2 + l3);
        return r;
    }

    // inverse of jet_down by damped Newton on log h(w) = log target
    cplx invert_down(cplx target) const {
        cplx t = target - base;
        if (t == 0.0) return base + q(); // both prime ends map to the foot; pick the right one
        // initial guess: shift by the driving increment (exact as s -> 0)
        cplx w = t - dw() * 0.5;
        if (std::imag(w) < 0.0) w = cplx(std::real(w), 0.0);
        cplx logt = std::log(t);
        double prev = 1e300;
        for (int it = 0; it < 80; ++it) {
            cplx A = w + p(), B = w - q();
            if (A == 0.0 || B == 0.0) { w += cplx(1e-14, 1e-14); continue; }
            cplx F = (1.0 - alpha) * std::log(A) + alpha * std::log(B) - logt;
            double err = std::abs(F);
            if (err < 1e-14) break;
            cplx dF = (1.0 - alpha) / A + alpha / B;
            cplx step = F / dF;
            // keep iterates in the closed upper half-plane; damp if diverging
            double lambda = 1.0;
            if (err > prev) lambda = 0.5;
            cplx wn = w - lambda * step;
            for (int k = 0; k < 30 && std::imag(wn) < -1e-15; ++k) {
                lambda *= 0.5;
                wn = w - lambda * step;
            }
            if (std::imag(wn) < 0.0) wn = cplx(std::real(wn), 0.0);
            w = wn;
            prev = err;
        }
        return base + w;
    }
};

// ---------------------------------------------------------------------------
// Power map
// ---------------------------------------------------------------------------

// z -> z^a with the principal branch (cut along R-).  The caller is
// responsible for keeping arguments off the cut.
struct PowerMap {
    double a = 1.0;

    Jet3 jet_fwd(cplx z) const {
        Jet3 r;
        r.f = std::pow(z, a);
        r.f1 = a * r.f / z;
        r.f2 = a * (a - 1.0) * r.f / (z * z);
        r.f3 = a * (a - 1.0) * (a - 2.0) * r.f / (z * z * z);
        return r;
    }
    cplx invert(cplx w) const { return std::pow(w, 1.0 / a); }
};

// ---------------------------------------------------------------------------
// MapChain
// ---------------------------------------------------------------------------

struct MapStep {
    std::variant<Mobius, VSlit, TiltedSlit, PowerMap> prim;
    bool inverse = false; // apply the primitive's inverse
};

// For slit primitives the canonical ("forward") direction is the *welding*
// (down) map H -> H \ slit, i.e. the inverse Loewner flow; inverse=true gives
// the uniformizing (up) direction.  This matches how traces are built: a
// trace chain holds down-steps, and chain.inverse() is the forward Loewner map.

struct MapChain {
    std::vector<MapStep> steps;

    static MapChain identity() { return {}; }

    MapChain& push(MapStep s) {
        // fuse adjacent Mobius steps so long chains stay shallow
        if (!steps.empty() && std::holds_alternative<Mobius>(s.prim) &&
            std::holds_alternative<Mobius>(steps.back().prim)) {
            Mobius m = std::get<Mobius>(s.prim);
            if (s.inverse) m = m.inverse();
            Mobius prev = std::get<Mobius>(steps.back().prim);
            if (steps.back().inverse) prev = prev.inverse();
            steps.back() = MapStep{prev.after(m), false};
            return *this;
        }
        steps.push_back(std::move(s));
        return *this;
    }
    MapChain& push_mobius(const Mobius& m) { return push(MapStep{m, false}); }

    MapChain& append(const MapChain& other) {
        for (const auto& s : other.steps) push(s);
        return *this;
    }

    MapChain inverse() const {
        MapChain r;
        r.steps.reserve(steps.size());
        for (auto it = steps.rbegin(); it != steps.rend(); ++it)
            r.push(MapStep{it->prim, !it->inverse});
        return r;
    }

    static cplx apply_step(const MapStep& s, cplx z) {
        return std::visit(
            [&](const auto& p) -> cplx {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Mobius>)
                    return s.inverse ? p.inverse().apply(z) : p.apply(z);
                else if constexpr (std::is_same_v<T, VSlit>)
                    return s.inverse ? p.jet_up(z).f : p.jet_down(z).f;
                else if constexpr (std::is_same_v<T, TiltedSlit>)
                    return s.inverse ? p.invert_down(z) : p.jet_down(z).f;
                else
                    return s.inverse ? p.invert(z) : p.jet_fwd(z).f;
            },
            s.prim);
    }

    static Jet3 step_jet(const MapStep& s, cplx z) {
        return std::visit(
            [&](const auto& p) -> Jet3 {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Mobius>) {
                    return s.inverse ? p.inverse().jet(z) : p.jet(z);
                } else if constexpr (std::is_same_v<T, VSlit>) {
                    return s.inverse ? p.jet_up(z) : p.jet_down(z);
                } else if constexpr (std::is_same_v<T, TiltedSlit>) {
                    if (!s.inverse) return p.jet_down(z);
                    cplx w = p.invert_down(z);
                    return invert_jet(p.jet_down(w), w);
                } else {
                    if (!s.inverse) return p.jet_fwd(z);
                    cplx w = p.invert(z);
                    return invert_jet(p.jet_fwd(w), w);
                }
            },
            s.prim);
    }

    cplx operator()(cplx z) const {
        for (const auto& s : steps) z = apply_step(s, z);
        return z;
    }

    Jet3 jet(cplx z) const {
        Jet3 acc{z, 1.0, 0.0, 0.0};
        for (const auto& s : steps) {
            Jet3 j = step_jet(s, acc.f);
            acc = compose(j, acc);
        }
        return acc;
    }

    // Schwarzian derivative by the cocycle S(f∘g) = (Sf)∘g · g'^2 + Sg
    cplx schwarzian(cplx z) const {
        cplx S = 0.0, der = 1.0, val = z;
        for (const auto& s : steps) {
            Jet3 j = step_jet(s, val);
            S = schwarzian_of(j) * der * der + S;
            der *= j.f1;
            val = j.f;
        }
        return S;
    }
};

// |chart derivative| of a chain at z = infinity, with the chart w = -1/z used
// on whichever side is infinite.  Only Mobius steps can move infinity.
inline double infinity_abs_deriv(const MapChain& chain) {
    bool at_inf = true;
    cplx p = 0.0;       // current point when finite
    double logd = 0.0;  // accumulated log |derivative|
    for (const auto& s : chain.steps) {
        if (std::holds_alternative<Mobius>(s.prim)) {
            Mobius m = std::get<Mobius>(s.prim);
            if (s.inverse) m = m.inverse();
            if (at_inf) {
                if (std::abs(m.c) == 0.0) {
                    logd += std::log(std::abs(m.d / m.a));
                } else {
                    at_inf = false;
                    logd += std::log(std::abs(m.det() / (m.c * m.c)));
                    p = m.a / m.c;
                }
            } else {
                cplx den = m.c * p + m.d;
                if (std::abs(den) < 1e-13) { // p is the pole: image is infinity
                    at_inf = true;
                    logd += std::log(std::abs(m.c * m.c / m.det()));
                } else {
                    logd += std::log(std::abs(m.det() / (den * den)));
                    p = m.apply(p);
                }
            }
        } else if (at_inf) {
            // slit and power primitives we use fix infinity; hydrodynamic slit
            // maps have chart derivative 1 there, z^a is never used with
            // infinity in play
            if (std::holds_alternative<PowerMap>(s.prim))
                throw std::domain_error("infinity through a power map");
        } else {
            Jet3 j = MapChain::step_jet(s, p);
            logd += std::log(std::abs(j.f1));
            p = j.f;
        }
    }
    return std::exp(logd);
}

} // namespace loewner
