// Standalone consumer driving the library end-to-end through the public
// headers only.  Exits nonzero on any failed check.
#include <loewner/energy.hpp>
#include <loewner/loewner.hpp>
#include <loewner/loopsoup.hpp>
#include <loewner/sle.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>

using namespace loewner;

static int failures = 0;

static void check(bool ok, const char* what, double got, double bound) {
    std::printf("%-54s %s  (%.3e vs %.1e)\n", what, ok ? "ok" : "FAIL", got, bound);
    if (!ok) ++failures;
}

int main() {
    // 1. driving -> chordal trace -> extracted driving roundtrip
    {
        DrivingFunction d;
        d.kind = DrivingFunction::Kind::Chordal;
        std::size_t n = 1200;
        for (std::size_t k = 0; k <= n; ++k) {
            double t = 1.0 * double(k) / double(n);
            d.t.push_back(t);
            d.w.push_back(0.8 * std::sin(2.0 * t) - 0.3 * t);
        }
        TraceResult tr = chordal_trace(d);
        DrivingFunction back = extract_driving(tr.curve);
        double sup = 0.0;
        for (std::size_t k = 0; k < back.t.size(); ++k)
            sup = std::max(sup, std::abs(back.w[k] - d.value(std::min(back.t[k], d.horizon()))));
        check(sup < 5e-2, "chordal roundtrip sup |w - w~|", sup, 5e-2);

        // 3. forward map vs the trace's accumulated chain at an exterior point
        cplx z(0.7, 1.3);
        cplx a = chordal_forward(d, z);
        cplx b = tr.chain(z);
        check(std::abs(a - b) < 1e-3, "chordal_forward vs TraceResult::chain", std::abs(a - b),
              1e-3);
    }

    // 2. radial welding-chain normalization |w'(0)| = e^{-T}
    {
        DrivingFunction d;
        d.kind = DrivingFunction::Kind::Radial;
        std::size_t n = 600;
        double T = 0.9;
        for (std::size_t k = 0; k <= n; ++k) {
            double t = T * double(k) / double(n);
            d.t.push_back(t);
            d.w.push_back(0.5 * std::sin(3.0 * t) + 1.0);
        }
        TraceResult tr = radial_trace(d);
        Jet3 j = tr.weld().jet(cplx(0.0, 0.0));
        double err = std::abs(std::abs(j.f1) - std::exp(-T));
        check(err < 1e-8, "radial weld |w'(0)| = e^{-T}", err, 1e-8);
    }

    // 4. loop masses: exact swap symmetry and two-route agreement
    {
        CurvePath c1, c2;
        c1.chart = c2.chart = Chart::D;
        for (int k = 0; k <= 24; ++k) {
            double s = double(k) / 24.0;
            c1.pts.emplace_back(-0.55 + 0.35 * s, -0.3 + 0.5 * s);
            c2.pts.emplace_back(0.45 - 0.2 * s, -0.25 + 0.6 * s);
        }
        Region disk;
        disk.chart = Chart::D;
        disk.complement = true;
        LoopParams p;
        p.n_samples = 20000;
        p.stream = RngStream(2026).child(7);
        Estimate ab = loop_mass_two_sets(LoopTarget{c1}, LoopTarget{c2}, disk, p);
        Estimate ba = loop_mass_two_sets(LoopTarget{c2}, LoopTarget{c1}, disk, p);
        check(ab.mean == ba.mean && ab.std_err == ba.std_err, "loop_mass_two_sets swap symmetry",
              std::abs(ab.mean - ba.mean), 0.0);
        Estimate mc = multi_cross_mass({c1, c2}, disk, p);
        check(ab.mean == mc.mean, "two-route bitwise agreement", std::abs(ab.mean - mc.mean), 0.0);
    }

    // energy layer: exponents, a forced potential, and a two-arc staircase
    {
        ExponentTable tb = exponents(2.75);
        double cb = (6.0 - 2.75) * (8.0 - 3.0 * 2.75) / (2.0 * 2.75);
        check(std::abs(tb.c + cb) < 1e-15, "central charge at kappa=2.75",
              tb.c, -cb);

        DrivingFunction d;
        d.kind = DrivingFunction::Kind::Chordal;
        for (int k = 0; k <= 400; ++k) {
            double t = double(k) / 400.0;
            d.t.push_back(t);
            d.w.push_back(0.3 * std::sin(3.0 * t));
        }
        MarkedConfiguration cfg;
        cfg.rho = 1.5;
        cfg.force_point = 1.0;
        PotentialReport r = rho_potential(d, cfg);
        check(std::isfinite(r.total), "forced chordal potential finite", r.total, 0.0);

        DrivingFunction a0, a1;
        a0.kind = a1.kind = DrivingFunction::Kind::Radial;
        for (int k = 0; k <= 40; ++k) {
            double t = 0.4 * double(k) / 40.0;
            a0.t.push_back(t);
            a0.w.push_back(0.2 * std::sin(t));
            a1.t.push_back(t);
            a1.w.push_back(3.0 - 0.1 * t);
        }
        MultiRadialOptions mo;
        mo.substeps = 60;
        PotentialReport mr = multiradial_potential({a0, a1}, {}, mo);
        check(std::isfinite(mr.total), "multiradial potential finite", mr.total, 0.0);
    }

    // sampler layer: rho = 0 degeneration and the trivial stay event
    {
        SamplerConfig sc;
        sc.kappa = 2.0;
        sc.T = 0.5;
        sc.dt = 1e-2;
        sc.seed = 12;
        SamplerConfig fc = sc;
        fc.rho = 0.0;
        fc.force_point = 1.0;
        DrivingFunction p0 = sample_driving(sc), p1 = sample_driving(fc);
        bool same = p0.w.size() == p1.w.size();
        for (std::size_t k = 0; same && k < p0.w.size(); ++k) same = p0.w[k] == p1.w[k];
        check(same, "rho=0 sampler bitwise equals plain sampler", 0.0, 0.0);

        sc.n_paths = 25;
        Estimate st = estimate_stay_probability(sc, full_disk_region(2048), 0.0);
        check(st.mean == 1.0, "stay probability on the full domain", st.mean, 1.0);
    }

    std::printf("%s\n", failures == 0 ? "CONSUMER PASS" : "CONSUMER FAIL");
    return failures == 0 ? 0 : 1;
}
