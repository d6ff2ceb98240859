#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "qpj/errors.hpp"

namespace qpj {

template <std::size_t N>
using Vec = std::array<double, N>;

struct QuadratureOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-14;
    std::size_t max_panels = 40000;
    /// When false, return the best estimate instead of throwing on budget exhaustion.
    bool throw_on_failure = true;
};

template <std::size_t N>
struct QuadratureResult {
    Vec<N> value{};
    double error = 0.0;
    std::size_t panels = 0;
    bool converged = true;
};

/// Closed interval [a, b] with its Gauss-Kronrod estimate; kept so the same
/// partition can be reused for related integrands.
struct Panel {
    double a;
    double b;
};

namespace detail {

// Kronrod 21-point abscissae on [-1, 1] (non-negative half) with the embedded
// 10-point Gauss rule at odd indices.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980305483, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <std::size_t N>
struct PanelEstimate {
    double a, b;
    Vec<N> value;
    double error;
    bool operator<(const PanelEstimate& o) const { return error < o.error; }
};

template <std::size_t N, class F>
PanelEstimate<N> gauss_kronrod21(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Vec<N> kron{}, gauss{}, abs_k{};
    const Vec<N> fc = f(center);
    for (std::size_t c = 0; c < N; ++c) {
        kron[c] = kWgk[10] * fc[c];
        abs_k[c] = kWgk[10] * std::abs(fc[c]);
    }
    std::array<Vec<N>, 10> f1{}, f2{};
    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        for (std::size_t c = 0; c < N; ++c) {
            const double s = f1[j][c] + f2[j][c];
            kron[c] += kWgk[j] * s;
            abs_k[c] += kWgk[j] * (std::abs(f1[j][c]) + std::abs(f2[j][c]));
            if (j % 2 == 1) gauss[c] += kWg[j / 2] * s;
        }
    }
    PanelEstimate<N> out{a, b, {}, 0.0};
    const double mean_scale = 0.5;
    for (std::size_t c = 0; c < N; ++c) {
        const double reskh = kron[c] * mean_scale;
        double resasc = kWgk[10] * std::abs(fc[c] - reskh);
        for (std::size_t j = 0; j < 10; ++j)
            resasc += kWgk[j] * (std::abs(f1[j][c] - reskh) + std::abs(f2[j][c] - reskh));
        resasc *= std::abs(half);
        double err = std::abs((kron[c] - gauss[c]) * half);
        if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
        const double resabs = abs_k[c] * std::abs(half);
        constexpr double eps = std::numeric_limits<double>::epsilon();
        if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(err, 50.0 * eps * resabs);
        out.value[c] = kron[c] * half;
        out.error = std::max(out.error, err);
    }
    return out;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (G10/K21) integration of a vector-valued
/// function over [points.front(), points.back()], with the interior points
/// used as initial panel boundaries. Integrable endpoint singularities at
/// those points are resolved by bisection toward them. The error target is
/// max(abs_tol, rel_tol * max_c |I_c|) on the component-wise maximum error.
template <std::size_t N, class F>
QuadratureResult<N> integrate(F&& f, std::vector<double> points, const QuadratureOptions& opt = {},
                              std::vector<Panel>* final_panels = nullptr) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    QuadratureResult<N> res;
    if (points.size() < 2) return res;

    std::priority_queue<detail::PanelEstimate<N>> heap;
    std::vector<detail::PanelEstimate<N>> done;
    Vec<N> total{};
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        auto p = detail::gauss_kronrod21<N>(f, points[i], points[i + 1]);
        for (std::size_t c = 0; c < N; ++c) total[c] += p.value[c];
        total_err += p.error;
        heap.push(p);
    }
    auto target = [&] {
        double scale = 0.0;
        for (double v : total) scale = std::max(scale, std::abs(v));
        return std::max(opt.abs_tol, opt.rel_tol * scale);
    };
    std::size_t count = heap.size();
    while (!heap.empty() && total_err > target()) {
        if (count >= opt.max_panels) {
            res.converged = false;
            break;
        }
        auto p = heap.top();
        heap.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b) || (p.b - p.a) < 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(p.a), std::abs(p.b))) {
            // Panel cannot be split further; its error is final.
            done.push_back(p);
            continue;
        }
        auto l = detail::gauss_kronrod21<N>(f, p.a, mid);
        auto r = detail::gauss_kronrod21<N>(f, mid, p.b);
        for (std::size_t c = 0; c < N; ++c) total[c] += l.value[c] + r.value[c] - p.value[c];
        total_err += l.error + r.error - p.error;
        heap.push(l);
        heap.push(r);
        ++count;
    }
    while (!heap.empty()) {
        done.push_back(heap.top());
        heap.pop();
    }
    // Re-sum in spatial order so the result does not depend on heap layout.
    std::sort(done.begin(), done.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    res.value = {};
    res.error = 0.0;
    for (const auto& p : done) {
        for (std::size_t c = 0; c < N; ++c) res.value[c] += p.value[c];
        res.error += p.error;
    }
    res.panels = done.size();
    if (final_panels) {
        final_panels->clear();
        for (const auto& p : done) final_panels->push_back({p.a, p.b});
    }
    if (!res.converged && opt.throw_on_failure) {
        std::ostringstream os;
        os << "adaptive quadrature exhausted " << opt.max_panels << " panels; error estimate " << res.error;
        throw QuadratureNotConverged(os.str());
    }
    return res;
}

/// Fixed GK21 rule applied on a given partition (no adaptivity).
template <std::size_t N, class F>
Vec<N> integrate_on_panels(F&& f, const std::vector<Panel>& panels) {
    Vec<N> total{};
    for (const auto& p : panels) {
        auto e = detail::gauss_kronrod21<N>(f, p.a, p.b);
        for (std::size_t c = 0; c < N; ++c) total[c] += e.value[c];
    }
    return total;
}

}  // namespace qpj
