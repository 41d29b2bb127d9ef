// Copyright 2026 The QUEST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace quest {

struct OptimizerSettings {
    size_t memory = 10;
    size_t max_iterations = 200;
    double gradient_tolerance = 1e-10;
    /// Strong-Wolfe sufficient-decrease constant.
    double c1 = 1e-4;
    /// Strong-Wolfe curvature constant.
    double c2 = 0.9;
    size_t max_line_search_steps = 40;

    void validate() const {
        if (memory == 0 || max_iterations == 0 || max_line_search_steps == 0) {
            throw std::invalid_argument("OptimizerSettings: memory and iteration limits must be positive");
        }
        if (!(gradient_tolerance > 0)) {
            throw std::invalid_argument("OptimizerSettings: gradient tolerance must be positive");
        }
        if (!(c1 > 0 && c1 < c2 && c2 < 1)) {
            throw std::invalid_argument("OptimizerSettings: need 0 < c1 < c2 < 1");
        }
    }
};

struct OptimizerResult {
    std::vector<double> x;
    double cost = 0;
    std::vector<double> gradient;
    size_t iterations = 0;
    size_t evaluations = 0;
    bool converged = false;
    bool line_search_failed = false;
};

/// Returns f(x) and writes grad f(x) into the second argument.
using CostGradFn = std::function<double(const std::vector<double> &, std::vector<double> &)>;

namespace detail {

inline double dot(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); i++) {
        s += a[i] * b[i];
    }
    return s;
}

inline double max_abs(const std::vector<double> &a) {
    double m = 0;
    for (double v : a) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

/// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), clamped into the safeguarded
/// interior of [a, b].
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
    double lo = std::min(a, b);
    double hi = std::max(a, b);
    double margin = 0.1 * (hi - lo);
    double d1 = ga + gb - 3 * (fa - fb) / (a - b);
    double disc = d1 * d1 - ga * gb;
    double t = 0.5 * (a + b);
    if (disc >= 0) {
        double d2 = std::copysign(std::sqrt(disc), b - a);
        double denom = gb - ga + 2 * d2;
        if (denom != 0) {
            t = b - (b - a) * (gb + d2 - d1) / denom;
        }
    }
    if (!std::isfinite(t) || t < lo + margin || t > hi - margin) {
        t = 0.5 * (a + b);
    }
    return t;
}

}  // namespace detail

/// Two-loop recursion: returns -H g for the L-BFGS inverse-Hessian approximation built
/// from the (s, y) history, oldest first, with initial scaling s^T y / y^T y of the newest pair.
inline std::vector<double> lbfgs_direction(const std::vector<double> &g, const std::deque<std::vector<double>> &s_hist,
                                           const std::deque<std::vector<double>> &y_hist) {
    const size_t m = s_hist.size();
    std::vector<double> q = g;
    std::vector<double> alpha(m), rho(m);
    for (size_t k = m; k-- > 0;) {
        rho[k] = 1.0 / detail::dot(y_hist[k], s_hist[k]);
        alpha[k] = rho[k] * detail::dot(s_hist[k], q);
        for (size_t i = 0; i < q.size(); i++) {
            q[i] -= alpha[k] * y_hist[k][i];
        }
    }
    double gamma = 1.0;
    if (m > 0) {
        gamma = detail::dot(s_hist[m - 1], y_hist[m - 1]) / detail::dot(y_hist[m - 1], y_hist[m - 1]);
    }
    for (double &v : q) {
        v *= gamma;
    }
    for (size_t k = 0; k < m; k++) {
        double beta = rho[k] * detail::dot(y_hist[k], q);
        for (size_t i = 0; i < q.size(); i++) {
            q[i] += s_hist[k][i] * (alpha[k] - beta);
        }
    }
    for (double &v : q) {
        v = -v;
    }
    return q;
}

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing + cubic zoom).
///
/// Stops when max|grad| <= gradient_tolerance, at the iteration cap, when a step no longer
/// lowers the cost, or when the line search fails (flagged; the best point is returned).
inline OptimizerResult minimize(const CostGradFn &fg, std::vector<double> x0, const OptimizerSettings &settings = {}) {
    settings.validate();
    const size_t n = x0.size();
    OptimizerResult res;
    res.x = std::move(x0);
    res.gradient.assign(n, 0.0);
    res.cost = fg(res.x, res.gradient);
    res.evaluations = 1;
    if (n == 0 || detail::max_abs(res.gradient) <= settings.gradient_tolerance) {
        res.converged = true;
        return res;
    }

    std::deque<std::vector<double>> s_hist, y_hist;
    std::vector<double> x_trial(n), g_trial(n);

    while (res.iterations < settings.max_iterations) {
        std::vector<double> d = lbfgs_direction(res.gradient, s_hist, y_hist);
        double dphi0 = detail::dot(res.gradient, d);
        if (!(dphi0 < 0)) {
            s_hist.clear();
            y_hist.clear();
            d = res.gradient;
            for (double &v : d) {
                v = -v;
            }
            dphi0 = detail::dot(res.gradient, d);
        }
        const double phi0 = res.cost;

        auto eval = [&](double alpha) {
            for (size_t i = 0; i < n; i++) {
                x_trial[i] = res.x[i] + alpha * d[i];
            }
            double f = fg(x_trial, g_trial);
            res.evaluations++;
            return std::make_pair(f, detail::dot(g_trial, d));
        };

        // Accepted point (alpha, f, grad, x).
        double best_alpha = 0;
        double best_f = phi0;
        std::vector<double> best_x, best_g;
        bool accepted = false;
        auto keep = [&](double alpha, double f) {
            best_alpha = alpha;
            best_f = f;
            best_x = x_trial;
            best_g = g_trial;
        };

        auto zoom = [&](double lo, double f_lo, double d_lo, double hi, double f_hi, double d_hi, size_t &budget) {
            while (budget-- > 0) {
                double a = detail::cubic_step(lo, f_lo, d_lo, hi, f_hi, d_hi);
                auto [f, dphi] = eval(a);
                if (f > phi0 + settings.c1 * a * dphi0 || f >= f_lo) {
                    hi = a;
                    f_hi = f;
                    d_hi = dphi;
                } else {
                    if (std::abs(dphi) <= -settings.c2 * dphi0) {
                        keep(a, f);
                        return true;
                    }
                    if (dphi * (hi - lo) >= 0) {
                        hi = lo;
                        f_hi = f_lo;
                        d_hi = d_lo;
                    }
                    lo = a;
                    f_lo = f;
                    d_lo = dphi;
                    if (f < best_f) {
                        keep(a, f);
                    }
                }
                if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) {
                    break;
                }
            }
            return false;
        };

        double alpha = 1.0;
        if (s_hist.empty()) {
            double gnorm = std::sqrt(detail::dot(res.gradient, res.gradient));
            alpha = std::min(1.0, 1.0 / gnorm);
        }
        double prev_alpha = 0;
        double prev_f = phi0;
        double prev_d = dphi0;
        size_t budget = settings.max_line_search_steps;
        for (size_t step = 0; budget > 0; step++) {
            budget--;
            auto [f, dphi] = eval(alpha);
            if (!std::isfinite(f) || f > phi0 + settings.c1 * alpha * dphi0 || (step > 0 && f >= prev_f)) {
                accepted = zoom(prev_alpha, prev_f, prev_d, alpha, f, dphi, budget);
                break;
            }
            if (std::abs(dphi) <= -settings.c2 * dphi0) {
                keep(alpha, f);
                accepted = true;
                break;
            }
            if (f < best_f) {
                keep(alpha, f);
            }
            if (dphi >= 0) {
                accepted = zoom(alpha, f, dphi, prev_alpha, prev_f, prev_d, budget);
                break;
            }
            prev_alpha = alpha;
            prev_f = f;
            prev_d = dphi;
            alpha *= 2;
        }

        if (!accepted && best_alpha == 0) {
            res.line_search_failed = true;
            break;
        }
        if (!accepted) {
            res.line_search_failed = true;
        }

        std::vector<double> s(n), y(n);
        for (size_t i = 0; i < n; i++) {
            s[i] = best_x[i] - res.x[i];
            y[i] = best_g[i] - res.gradient[i];
        }
        double previous_cost = res.cost;
        res.x = std::move(best_x);
        res.gradient = std::move(best_g);
        res.cost = best_f;
        res.iterations++;
        double sy = detail::dot(s, y);
        if (sy > 1e-300) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            if (s_hist.size() > settings.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        if (detail::max_abs(res.gradient) <= settings.gradient_tolerance) {
            res.converged = true;
            break;
        }
        if (res.line_search_failed) {
            break;
        }
        if (previous_cost - res.cost <= 1e-15 * std::abs(previous_cost)) {
            break;
        }
    }
    return res;
}

/// Separate cost and gradient callables.
inline OptimizerResult minimize(const std::function<double(const std::vector<double> &)> &cost_fn,
                                const std::function<std::vector<double>(const std::vector<double> &)> &grad_fn,
                                std::vector<double> x0, const OptimizerSettings &settings = {}) {
    return minimize(
        CostGradFn([&](const std::vector<double> &x, std::vector<double> &g) {
            g = grad_fn(x);
            return cost_fn(x);
        }),
        std::move(x0), settings);
}

}  // namespace quest
