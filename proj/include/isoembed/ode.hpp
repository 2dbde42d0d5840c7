#pragma once

// The coupled ODE system for the unknown initial-data functions a(s), b(s):
//
//   (1/2) a'(s)^-2     = G/(G+1)                      at (f(a,b), g(a,b))
//   (1/2) b'(s)^-2 + 1 = hhat_v^-2 G^2/(G+1)          at (f(a,b), g(a,b))
//
// in standard form with the plus-sign square roots,
//
//   a' = sqrt((G+1)/(2G)),   b' = 1/sqrt(2 m),   m = hhat_v^-2 G^2/(G+1) - 1,
//
// integrated from a(0) = b(0) = 0 by fixed-step RK4.  The radicand
// positivity (m > 0, "reality") is checked at every right-side evaluation.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoembed/characteristics.hpp"
#include "isoembed/components.hpp"
#include "isoembed/numerics.hpp"

namespace isoembed {

class reality_error : public std::runtime_error {
public:
    reality_error(double s, double margin)
        : std::runtime_error("reality violation at s = " + format_double(s) +
                             ": margin " + format_double(margin) +
                             " (radicand " + format_double(2.0 * margin) + " <= 0)"),
          s_(s), margin_(margin) {}
    double s() const { return s_; }
    double margin() const { return margin_; }
    double radicand() const { return 2.0 * margin_; }

private:
    double s_, margin_;
};

// hhat_v^-2 G^2/(G+1) - 1; positive iff b' is a positive real.
inline double reality_margin(double ghat, double hhat_v) {
    return 1.0 / (hhat_v * hhat_v) * ghat * ghat / (ghat + 1.0) - 1.0;
}

// The same inequality with denominator G^2 + 1 instead of G + 1 (the two
// appear in different places of the derivation; this build is keyed to
// the G + 1 form that the b' formula actually divides by).  Reported so
// a run shows when the two variants disagree about reality.
inline double reality_margin_variant(double ghat, double hhat_v) {
    return 1.0 / (hhat_v * hhat_v) * ghat * ghat / (ghat * ghat + 1.0) - 1.0;
}

inline double reality_margin(const LevelPoint& lp) { return reality_margin(lp.ghat, lp.hhat_v); }

inline double reality_check(const LevelComponents& comps, Vec2 ab, Vec2 seed) {
    return reality_margin(comps.at(ab, seed));
}

// Standard-form right side from pointwise values (plus-sign convention).
inline Vec2 rhs_from_values(double s, double ghat, double hhat_v) {
    const double da = std::sqrt((ghat + 1.0) / (2.0 * ghat));
    const double m = reality_margin(ghat, hhat_v);
    if (!(m > 0.0)) throw reality_error(s, m);
    return {da, 1.0 / std::sqrt(2.0 * m)};
}

// Initial-condition slope chooser: the largest delta = 2^-k such that with
// hhat_v(uhat, 0) = -G(uhat, 0) delta the second-equation right side
// hhat_v^-2 G^2/(G+1) exceeds 1 + margin along the initial segment.
struct HhatChoice {
    double delta = 0.0;
};

inline HhatChoice choose_hhat(const ScalarField2& ghat, Rect domain, double margin,
                              int nsamples = 257) {
    for (int k = 0; k <= 40; ++k) {
        const double delta = std::ldexp(1.0, -k);
        bool ok = true;
        for (int i = 0; i < nsamples && ok; ++i) {
            const double uhat = domain.x0 + domain.width() * i / (nsamples - 1);
            const double g = ghat(uhat, 0.0);
            const double hv = -g * delta;
            const double rhs2 = 1.0 / (hv * hv) * g * g / (g + 1.0);
            ok = rhs2 > 1.0 + margin;
        }
        if (ok) return {delta};
    }
    throw domain_error("choose_hhat: no slope above 2^-40 satisfies the reality margin");
}

struct OdeSample {
    double s = 0.0;
    double a = 0.0, b = 0.0;
    double da = 0.0, db = 0.0;
};

// Sampled trajectory with cubic Hermite dense output.
class ODETrajectory {
public:
    ODETrajectory(std::vector<OdeSample> samples, bool truncated, std::string truncation_reason,
                  double truncation_s, double halving_error)
        : samples_(std::move(samples)), truncated_(truncated),
          truncation_reason_(std::move(truncation_reason)), truncation_s_(truncation_s),
          halving_error_(halving_error) {
        if (samples_.empty()) throw std::logic_error("ODETrajectory: no samples");
    }

    const std::vector<OdeSample>& samples() const { return samples_; }
    double s_end() const { return samples_.back().s; }
    bool truncated() const { return truncated_; }
    const std::string& truncation_reason() const { return truncation_reason_; }
    double truncation_s() const { return truncation_s_; }
    double halving_error() const { return halving_error_; }

    double a(double s) const { return hermite(s, &OdeSample::a, &OdeSample::da).first; }
    double b(double s) const { return hermite(s, &OdeSample::b, &OdeSample::db).first; }
    double da(double s) const { return hermite(s, &OdeSample::a, &OdeSample::da).second; }
    double db(double s) const { return hermite(s, &OdeSample::b, &OdeSample::db).second; }

    InitialData1D a_data() const {
        auto self = *this;
        return {[self](double s) { return self.a(s); },
                [self](double s) { return self.da(s); }, 0.0, s_end()};
    }
    InitialData1D b_data() const {
        auto self = *this;
        return {[self](double s) { return self.b(s); },
                [self](double s) { return self.db(s); }, 0.0, s_end()};
    }

private:
    std::pair<double, double> hermite(double s, double OdeSample::*val,
                                      double OdeSample::*der) const {
        if (samples_.size() == 1) return {samples_[0].*val, samples_[0].*der};
        const double s_lo = samples_.front().s, s_hi = samples_.back().s;
        s = std::clamp(s, s_lo, s_hi);
        const double step = (s_hi - s_lo) / (samples_.size() - 1);
        size_t k = std::min(static_cast<size_t>((s - s_lo) / step), samples_.size() - 2);
        const OdeSample& p0 = samples_[k];
        const OdeSample& p1 = samples_[k + 1];
        const double h = p1.s - p0.s;
        const double t = (s - p0.s) / h;
        const double y0 = p0.*val, y1 = p1.*val, m0 = (p0.*der) * h, m1 = (p1.*der) * h;
        const double t2 = t * t, t3 = t2 * t;
        const double value = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 +
                             (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
        const double deriv = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 +
                              (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * m1) / h;
        return {value, deriv};
    }

    std::vector<OdeSample> samples_;
    bool truncated_ = false;
    std::string truncation_reason_;
    double truncation_s_ = 0.0;
    double halving_error_ = 0.0;
};

struct RhsState {
    Vec2 value;     // (a', b')
    Vec2 preimage;  // (uhat, vhat) found by the inversion, reused as next seed
};

namespace detail {

// Right side of the system; the preimage seed is threaded by the caller.
inline RhsState ode_rhs(const LevelComponents& comps, double s, double a, double b, Vec2 seed) {
    const LevelPoint lp = comps.at({a, b}, seed);
    return {rhs_from_values(s, lp.ghat, lp.hhat_v), lp.uhat_point};
}

struct IntegrationRun {
    std::vector<OdeSample> samples;
    bool truncated = false;
    std::string reason;
    double truncation_s = 0.0;
};

// Classical fixed-step RK4 on a right side (s, a, b, seed) -> RhsState;
// the seed is how the inversion inside the right side is warm-started.
template <typename Rhs>
IntegrationRun run_rk4(const Rhs& rhs_fn, double s_max, int nsteps, Vec2 seed0, bool record) {
    IntegrationRun run;
    double a = 0.0, b = 0.0;
    Vec2 seed = seed0;

    // The right side must exist at the initial point; a reality violation
    // here is an error, not a truncation.
    RhsState first = rhs_fn(0.0, a, b, seed);
    seed = first.preimage;
    if (record) run.samples.push_back({0.0, a, b, first.value.x, first.value.y});
    if (s_max <= 0.0 || nsteps == 0) return run;

    const double h = s_max / nsteps;
    RhsState cur = first;
    for (int k = 0; k < nsteps; ++k) {
        const double s = h * k;
        try {
            const Vec2 k1 = cur.value;
            const RhsState r2 = rhs_fn(s + 0.5 * h, a + 0.5 * h * k1.x, b + 0.5 * h * k1.y, seed);
            const RhsState r3 = rhs_fn(s + 0.5 * h, a + 0.5 * h * r2.value.x,
                                       b + 0.5 * h * r2.value.y, seed);
            const RhsState r4 = rhs_fn(s + h, a + h * r3.value.x, b + h * r3.value.y, seed);
            a += h / 6.0 * (k1.x + 2 * r2.value.x + 2 * r3.value.x + r4.value.x);
            b += h / 6.0 * (k1.y + 2 * r2.value.y + 2 * r3.value.y + r4.value.y);
            cur = rhs_fn(s + h, a, b, seed);
            seed = cur.preimage;
            if (record) run.samples.push_back({s + h, a, b, cur.value.x, cur.value.y});
        } catch (const std::runtime_error& e) {
            run.truncated = true;
            run.reason = e.what();
            run.truncation_s = s;
            break;
        }
    }
    return run;
}

} // namespace detail

// Fixed-step RK4 from a(0) = b(0) = 0 with `steps_per_unit` steps per unit
// of s; a second half-step pass provides the error estimate.  Truncates
// early (with the reason recorded) on reality violation, inversion
// failure, or domain exit past s = 0.
template <typename Rhs>
ODETrajectory integrate_with_rhs(const Rhs& rhs_fn, double s_max, Vec2 seed0 = {0.0, 0.0},
                                 int steps_per_unit = 4096) {
    const int nsteps = s_max > 0.0 ? std::max(1, static_cast<int>(std::ceil(s_max * steps_per_unit)))
                                   : 0;
    detail::IntegrationRun run = detail::run_rk4(rhs_fn, s_max, nsteps, seed0, true);

    double halving_error = 0.0;
    if (run.samples.size() > 1) {
        const double s_reached = run.samples.back().s;
        detail::IntegrationRun fine =
            detail::run_rk4(rhs_fn, s_reached, 2 * (static_cast<int>(run.samples.size()) - 1),
                            seed0, true);
        if (!fine.samples.empty()) {
            const OdeSample& c = run.samples.back();
            const OdeSample& f = fine.samples.back();
            if (f.s == c.s)
                halving_error = std::max(std::abs(f.a - c.a), std::abs(f.b - c.b));
        }
    }
    return ODETrajectory(std::move(run.samples), run.truncated, run.reason, run.truncation_s,
                         halving_error);
}

inline ODETrajectory integrate(const LevelComponents& comps, double s_max, Vec2 seed0 = {0.0, 0.0},
                               int steps_per_unit = 4096) {
    auto rhs_fn = [&comps](double s, double a, double b, Vec2 seed) {
        return detail::ode_rhs(comps, s, a, b, seed);
    };
    return integrate_with_rhs(rhs_fn, s_max, seed0, steps_per_unit);
}

// Max residuals of the two equations re-substituted along the trajectory.
inline std::pair<double, double> resubstitution_residual(const ODETrajectory& traj,
                                                         const LevelComponents& comps,
                                                         Vec2 seed0 = {0.0, 0.0}) {
    double r1 = 0.0, r2 = 0.0;
    Vec2 seed = seed0;
    for (const OdeSample& smp : traj.samples()) {
        const LevelPoint lp = comps.at({smp.a, smp.b}, seed);
        seed = lp.uhat_point;
        r1 = std::max(r1, std::abs(0.5 / (smp.da * smp.da) - lp.ghat / (lp.ghat + 1.0)));
        r2 = std::max(r2, std::abs(0.5 / (smp.db * smp.db) + 1.0 - lp.S));
    }
    return {r1, r2};
}

} // namespace isoembed
