#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "qpj/polarization.hpp"

using namespace qpj;

namespace {

// Independent BCS functions with a Dynes rate: retarded branch picked from
// the principal square root of (Delta^2 - z^2).
struct Bcs {
    double gap, nu, temperature;
    cplx g(double w, double s) const {
        const cplx z{w, s * nu};
        return -z / std::sqrt(gap * gap - z * z);
    }
    cplx f(double w, double s) const {
        const cplx z{w, s * nu};
        return -gap / std::sqrt(gap * gap - z * z);
    }
    double h(double w) const { return temperature > 0 ? std::tanh(w / (2 * temperature)) : (w > 0) - (w < 0); }
};

struct OraclePi {
    cplx n_ret, s_ret, n_kel, s_kel;
};

// Trapezoid rule on a uniform mesh over the same window as the library.
OraclePi oracle(const Bcs& b, double w, std::size_t points = 1000000, double cutoff = 40.0) {
    const double lo = std::min(0.0, w) - cutoff, hi = std::max(0.0, w) + cutoff;
    const double dx = (hi - lo) / static_cast<double>(points);
    OraclePi acc{};
    for (std::size_t i = 0; i <= points; ++i) {
        const double x = lo + dx * static_cast<double>(i);
        const double wt = (i == 0 || i == points) ? 0.5 : 1.0;
        const cplx gr = b.g(x, 1), ga = b.g(x, -1), fr = b.f(x, 1), fa = b.f(x, -1);
        const cplx gr2 = b.g(x - w, 1), ga2 = b.g(x - w, -1), fr2 = b.f(x - w, 1), fa2 = b.f(x - w, -1);
        const cplx gk = (gr - ga) * b.h(x), fk = (fr - fa) * b.h(x);
        const cplx gk2 = (gr2 - ga2) * b.h(x - w), fk2 = (fr2 - fa2) * b.h(x - w);
        acc.n_ret += wt * (gr * gk2 + gk * ga2);
        acc.s_ret += wt * (fr * fk2 + fk * fa2);
        acc.n_kel += wt * (gk * gk2 - (gr - ga) * (gr2 - ga2));
        acc.s_kel += wt * (fk * fk2 - (fr - fa) * (fr2 - fa2));
    }
    const cplx m{0.0, -dx};
    return {m * acc.n_ret, m * acc.s_ret, m * acc.n_kel, m * acc.s_kel};
}

double scale(cplx a) { return std::max(1.0, std::abs(a)); }

}  // namespace

TEST(Polarization, RetardedMatchesTrapezoidOracleAtSpotFrequency) {
    const double nu = 1e-3, t = 0.04;
    const auto j = symmetric_junction(t, 1.0, nu);
    const auto p = pi_retarded(j, 1.2);
    const auto o = oracle({0.5, nu, t}, 1.2);
    EXPECT_LT(std::abs(p.n - o.n_ret) / scale(o.n_ret), 1e-4);
    EXPECT_LT(std::abs(p.s - o.s_ret) / scale(o.s_ret), 1e-4);
}

TEST(Polarization, RetardedAndKeldyshMatchOracleAtRandomFrequencies) {
    const double nu = 1e-3, t = 0.1;
    const auto j = symmetric_junction(t, 1.0, nu);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 20; ++i) {
        const double w = u(rng);
        const auto o = oracle({0.5, nu, t}, w, 400000);
        const auto r = pi_retarded(j, w);
        const auto k = pi_keldysh_direct(j, w);
        EXPECT_LT(std::abs(r.n - o.n_ret) / scale(o.n_ret), 1e-4) << "omega " << w;
        EXPECT_LT(std::abs(r.s - o.s_ret) / scale(o.s_ret), 1e-4) << "omega " << w;
        EXPECT_LT(std::abs(k.n - o.n_kel) / scale(o.n_kel), 1e-4) << "omega " << w;
        EXPECT_LT(std::abs(k.s - o.s_kel) / scale(o.s_kel), 1e-4) << "omega " << w;
    }
}

TEST(Polarization, FluctuationDissipationAgreesWithDirectKeldysh) {
    for (double t : {0.04, 0.32}) {
        const auto j = symmetric_junction(t);
        for (double w : {-2.3, -0.7, 0.3, 1.0 + 1e-3, 1.6, 4.0}) {
            const auto d = pi_keldysh_direct(j, w), f = pi_keldysh_fdt(j, w);
            EXPECT_LT(std::abs(d.n - f.n), 1e-6 * scale(d.n)) << t << " " << w;
            EXPECT_LT(std::abs(d.s - f.s), 1e-6 * scale(d.s)) << t << " " << w;
        }
    }
}

TEST(Polarization, DissipativeSignOfNormalChannel) {
    // Im Pi_n^R < 0 for omega > 0; together with the admittance relation this
    // makes Re Y >= 0 in equilibrium.
    for (double t : {0.0, 0.04, 0.32}) {
        const auto j = symmetric_junction(t);
        for (double w : {0.05, 0.5, 1.2, 3.0}) {
            const auto p = pi_retarded(j, w);
            if (t == 0.0 && w < 1.0) continue;
            EXPECT_LT(p.n.imag(), 0.0) << t << " " << w;
        }
    }
}

TEST(Polarization, SubgapImaginaryPartVanishesAtZeroTemperature) {
    const auto j = symmetric_junction(0.0);
    for (double w : {0.1, 0.5, 0.9}) {
        const auto p = pi_retarded(j, w);
        EXPECT_LT(std::abs(p.n.imag()), 1e-4);
        EXPECT_LT(std::abs(p.s.imag()), 1e-4);
    }
    EXPECT_LT(pi_retarded(j, 1.2).n.imag(), -0.5);
}

TEST(Polarization, ZeroFrequencyValuesAreReal) {
    for (double t : {0.0, 0.04, 0.32}) {
        const auto p = pi_retarded(symmetric_junction(t), 0.0);
        EXPECT_LT(std::abs(p.n.imag()), 1e-8);
        EXPECT_LT(std::abs(p.s.imag()), 1e-8);
    }
}

TEST(Polarization, AdvancedIsConjugate) {
    const auto j = symmetric_junction(0.1);
    const auto r = pi_retarded(j, 0.8), a = pi_advanced(j, 0.8);
    EXPECT_EQ(a.n, std::conj(r.n));
    EXPECT_EQ(a.s, std::conj(r.s));
}

TEST(Polarization, FluctuationDissipationRejectsUnequalTemperatures) {
    auto j = symmetric_junction(0.04);
    j.right.temperature = 0.08;
    EXPECT_THROW(pi_keldysh_fdt(j, 0.5), TemperatureMismatch);
    EXPECT_NO_THROW(pi_keldysh_direct(j, 0.5));
}

class PolarizationTableTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        GridSpec spec;
        spec.omega_max = 6.0;
        spec.spacing = 0.006;
        table_ = new PolarizationTable(build_table(symmetric_junction(0.04), spec));
    }
    static void TearDownTestSuite() { delete table_; }
    static PolarizationTable* table_;
};

PolarizationTable* PolarizationTableTest::table_ = nullptr;

TEST_F(PolarizationTableTest, InterpolationIsExactAtNodes) {
    const auto& t = *table_;
    for (std::size_t i = 0; i < t.grid().size(); i += 37) {
        const auto r = t.retarded(t.grid()[i]);
        EXPECT_EQ(r.n, t.values()[i].pi_n_ret);
        EXPECT_EQ(r.s, t.values()[i].pi_s_ret);
    }
}

TEST_F(PolarizationTableTest, MidpointInterpolationError) {
    const auto& t = *table_;
    const auto j = t.junction();
    double worst = 0.0;
    for (double w : {0.31, 0.77, 1.53, 2.21, -1.37}) {
        const auto it = std::upper_bound(t.grid().begin(), t.grid().end(), w);
        const double mid = 0.5 * (*(it - 1) + *it);
        const auto direct = pi_retarded(j, mid);
        const auto tab = t.retarded(mid);
        worst = std::max({worst, std::abs(direct.n - tab.n), std::abs(direct.s - tab.s)});
    }
    EXPECT_LT(worst, 1e-3);
}

TEST_F(PolarizationTableTest, MirrorSymmetry) {
    const auto& t = *table_;
    for (double w : {0.2, 1.1, 2.9}) {
        EXPECT_EQ(t.retarded(-w).n, std::conj(t.retarded(w).n));
        EXPECT_EQ(t.retarded(-w).s, std::conj(t.retarded(w).s));
    }
}

TEST_F(PolarizationTableTest, KeldyshFollowsFluctuationDissipationAtQueryPoint) {
    const auto& t = *table_;
    const double w = 0.4321;
    const auto k = t.keldysh(w);
    const auto expected = keldysh_from_retarded(t.retarded(w), w, 0.04);
    EXPECT_NEAR(std::abs(k.n - expected.n), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(k.s - expected.s), 0.0, 1e-14);
}

TEST_F(PolarizationTableTest, CsvRoundTrip) {
    std::stringstream ss;
    write_table_csv(ss, *table_);
    const auto back = read_table_csv(ss);
    ASSERT_EQ(back.grid().size(), table_->grid().size());
    for (std::size_t i = 0; i < back.grid().size(); ++i) {
        EXPECT_EQ(back.grid()[i], table_->grid()[i]);
        EXPECT_EQ(back.values()[i].pi_n_ret, table_->values()[i].pi_n_ret);
        EXPECT_EQ(back.values()[i].pi_s_kel, table_->values()[i].pi_s_kel);
    }
    EXPECT_EQ(back.junction().left.temperature, 0.04);
    EXPECT_EQ(back.quadrature_tag(), table_->quadrature_tag());
}

TEST_F(PolarizationTableTest, CsvRejectsMalformedInput) {
    std::stringstream bad("omega,a\n1,2\n");
    EXPECT_THROW(read_table_csv(bad), ParseError);
}

TEST_F(PolarizationTableTest, PiTildeCombinations) {
    const auto& t = *table_;
    const double w = 0.3, wp = -0.45;
    const auto a = t.retarded(w + wp), b = t.retarded(wp);
    EXPECT_EQ(pi_tilde(t, w, wp, PiKind::normal), 0.25 * (a.n - b.n));
    EXPECT_EQ(pi_tilde(t, w, wp, PiKind::anomalous), 0.25 * (a.s + b.s));
    EXPECT_EQ(pi_tilde(t, 0.0, wp, PiKind::normal), cplx(0.0, 0.0));
}

TEST_F(PolarizationTableTest, OutOfRangeQueriesThrow) {
    EXPECT_THROW(table_->retarded(6.5), OutOfTableRange);
    EXPECT_THROW(table_->keldysh(-6.01), OutOfTableRange);
    EXPECT_NO_THROW(table_->retarded(6.0));
}

TEST_F(PolarizationTableTest, KramersKronigResidualIsSmall) {
    EXPECT_LT(kramers_kronig_residual(*table_), 0.05);
}

TEST(Hilbert, ZeroInputGivesZero) {
    std::vector<double> g, im;
    for (int i = -100; i <= 100; ++i) g.push_back(0.05 * i), im.push_back(0.0);
    for (double v : detail::hilbert_real_part(g, im)) EXPECT_EQ(v, 0.0);
}

TEST(Hilbert, ReproducesAnalyticPair) {
    // F(w) = i / (w + i) is analytic in the upper half plane:
    // Re F = 1 / (1 + w^2), Im F = w / (1 + w^2).
    std::vector<double> g, im;
    for (int i = -4000; i <= 4000; ++i) {
        const double w = 0.005 * i;
        g.push_back(w);
        im.push_back(w / (1 + w * w));
    }
    const auto re = detail::hilbert_real_part(g, im);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
        if (std::abs(g[i]) < 10) worst = std::max(worst, std::abs(re[i] - 1.0 / (1 + g[i] * g[i])));
    EXPECT_LT(worst, 1e-4);
}
