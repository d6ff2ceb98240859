#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <memory>

#include "qpj/config.hpp"
#include "qpj/resonator.hpp"

using namespace qpj;

namespace {

ReducedSetup table_one() {
    std::ifstream in(std::string(QPJ_SOURCE_DIR) + "/configs/default.ini");
    return to_reduced_units(parse_config(in));
}

QuasitemperatureOptions qtemp_options(const ReducedUnits& u) {
    QuasitemperatureOptions o;
    o.t_lo = u.kelvin_to_reduced(1e-3);
    o.t_hi = u.kelvin_to_reduced(10.0);
    o.tol = u.kelvin_to_reduced(1e-4);
    return o;
}

// Table 1 circuit with a table wide enough for drives between 29 and 36 GHz at 0.2 mV.
class TableOne : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        setup_ = std::make_unique<ReducedSetup>(table_one());
        const auto& u = setup_->units;
        double extent = 0.0;
        for (double ghz : {29.0, 36.0})
            extent = std::max(extent, required_table_extent({0.0, setup_->drive.amplitude, u.hz_to_reduced(ghz * 1e9)}));
        GridSpec g;
        g.omega_max = extent;
        g.inner_extent = 3.0;
        g.outer_spacing = 0.02;
        table_ = std::make_unique<PolarizationTable>(build_table(setup_->junction, g));
    }
    static void TearDownTestSuite() {
        table_.reset();
        setup_.reset();
    }
    static DriveParams drive_at(double ghz, double amplitude_mv = 0.2) {
        const auto& u = setup_->units;
        return {0.0, u.volt_to_reduced_energy(amplitude_mv * 1e-3), u.hz_to_reduced(ghz * 1e9)};
    }
    static std::unique_ptr<ReducedSetup> setup_;
    static std::unique_ptr<PolarizationTable> table_;
};

std::unique_ptr<ReducedSetup> TableOne::setup_;
std::unique_ptr<PolarizationTable> TableOne::table_;

SpectralResult lorentzian(double center, double gamma, double span, std::size_t n) {
    SpectralResult s;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = center - span + 2 * span * static_cast<double>(i) / static_cast<double>(n - 1);
        s.grid.push_back(w);
        s.g_ret.push_back(cplx{0.0, -1.0 / ((w - center) * (w - center) + 0.25 * gamma * gamma)});
    }
    return s;
}

}  // namespace

TEST(ResonatorGreen, BareCircuit) {
    const ResonatorCircuit c{2.0, 0.5, 0.0, 1.0, 0.0};
    EXPECT_DOUBLE_EQ(c.bare_frequency(), 1.0);
    EXPECT_EQ(resonator_green(c, 0.0, 0.0), cplx(-2.0, 0.0));
    EXPECT_GT(std::abs(resonator_green(c, 1.0 - 1e-9, 0.0)), 1e8);
    EXPECT_GT(std::abs(resonator_green(c, -1.0 + 1e-9, 0.0)), 1e8);
}

TEST(ResonatorCircuitValidation, RejectsNonPositiveElements) {
    EXPECT_THROW((ResonatorCircuit{0.0, 1.0, 0.0, 1.0, 0.1}.validate()), ValidationError);
    EXPECT_THROW((ResonatorCircuit{1.0, 1.0, -1.0, 1.0, 0.1}.validate()), ValidationError);
    EXPECT_NO_THROW((ResonatorCircuit{1.0, 1.0, 0.0, 1.0, 0.1}.validate()));
}

TEST(ResonatorCircuitValidation, LowImpedanceFlag) {
    const auto s = table_one();
    const double rq = s.units.quantum_ratio();
    EXPECT_TRUE(s.circuit.low_impedance(rq));
    ResonatorCircuit high = s.circuit;
    high.inductance = rq * rq * high.capacitance;
    EXPECT_FALSE(high.low_impedance(rq));
}

TEST(LineShapeAnalysis, LorentzianWidthAndFlag) {
    const auto s = lorentzian(1.0, 0.01, 0.2, 4001);
    const auto shape = line_shape(s);
    EXPECT_NEAR(shape.fwhm / 0.01, 1.0, 0.01);
    EXPECT_NEAR(shape.center, 1.0, 1e-6);
    EXPECT_FALSE(shape.non_lorentzian);
    EXPECT_DOUBLE_EQ(linewidth(s), shape.fwhm);
}

TEST(LineShapeAnalysis, DistortedLineIsFlagged) {
    auto s = lorentzian(1.0, 0.01, 0.2, 4001);
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        if (s.grid[i] > 1.01) s.g_ret[i] *= 6.0;
    EXPECT_TRUE(line_shape(s).non_lorentzian);
}

TEST(LineShapeAnalysis, EdgePeakThrows) {
    auto s = lorentzian(1.0, 0.01, 0.2, 101);
    s.g_ret.front() = cplx{0.0, -1e9};
    EXPECT_THROW(stark_shifted_freq(s), ResonanceNotFound);
}

TEST(LineShapeAnalysis, WeakOhmicShuntLandsOnBarePole) {
    const ResonatorCircuit c{1.0, 1.0, 0.0, 1.0, 0.0};
    SpectralResult s;
    for (int i = 0; i <= 2000; ++i) {
        const double w = 0.999 + 0.002 * i / 2000.0;
        s.grid.push_back(w);
        s.g_ret.push_back(resonator_green(c, w, cplx{1e-4 * w, 0.0}));
    }
    EXPECT_NEAR(stark_shifted_freq(s), 1.0, 1e-6);
    EXPECT_NEAR(linewidth(s), 1e-4, 2e-6);
}

TEST_F(TableOne, AdvancedIsConjugate) {
    const auto d = drive_at(32.0);
    for (double w : {0.03, 0.0517, 0.2}) EXPECT_EQ(g_advanced_res(setup_->circuit, *table_, d, w), std::conj(g_retarded_res(setup_->circuit, *table_, d, w)));
}

TEST_F(TableOne, RetardedMatchesRecomputedAdmittance) {
    const auto& c = setup_->circuit;
    const auto d = drive_at(32.0);
    const double x = d.index();
    const int nmax = static_cast<int>(std::ceil(x + 10 * std::cbrt(x) + 12));
    // c_n = J_n(-x) at zero phase bias
    auto cn = [&](int n) { return n >= 0 && n % 2 ? -std::cyl_bessel_j(n, x) : std::cyl_bessel_j(std::abs(n), x); };
    for (double w : {0.03, 0.0513, 0.09}) {
        cplx acc = 0.0;
        for (int np = -nmax; np <= nmax; ++np) {
            const auto a = table_->retarded(w + np * d.drive_freq), b = table_->retarded(np * d.drive_freq);
            const cplx pn = 0.25 * (a.n - b.n), ps = 0.25 * (a.s + b.s);
            acc += cn(np) * (pn * cn(np) + ps * cn(-np)) + cn(-np) * (ps * cn(np) + pn * cn(-np));
        }
        const cplx y = cplx{0.0, 0.5 / w} * acc;
        const cplx expected = c.inductance / (w * w * c.inductance * c.capacitance + cplx{0.0, 1.0} * w * c.inductance * y - 1.0);
        const cplx got = g_retarded_res(c, *table_, d, w);
        EXPECT_LT(std::abs(got - expected), 1e-9 * std::abs(expected)) << w;
    }
}

TEST_F(TableOne, EquilibriumKeldyshFollowsFluctuationDissipation) {
    const auto d = drive_at(32.0, 0.0);
    const double temp = setup_->junction.temperature();
    for (double w : {0.01, 0.04, 0.0517, 0.08, 0.3}) {
        const cplx gr = g_retarded_res(setup_->circuit, *table_, d, w);
        const cplx gk = g_keldysh_res(setup_->circuit, *table_, d, 0, w);
        const cplx expected = 0.5 * (gr - std::conj(gr)) * thermal_coth(w, temp);
        EXPECT_LT(std::abs(gk - expected), 1e-9 * std::abs(expected)) << w;
    }
}

TEST_F(TableOne, KeldyshSignForPositiveFrequency) {
    for (double amp : {0.0, 0.2}) {
        const auto d = drive_at(32.0, amp);
        for (double w : {0.02, 0.05, 0.0517, 0.1, 0.5}) EXPECT_LT(g_keldysh_res(setup_->circuit, *table_, d, 0, w).imag(), 0.0) << amp << " " << w;
    }
}

TEST_F(TableOne, TransmissionCases) {
    const auto d = drive_at(32.0);
    ResonatorCircuit open = setup_->circuit;
    open.coupling_capacitance = 0.0;
    EXPECT_EQ(s21(open, *table_, d, 0.05), cplx(1.0, 0.0));

    const auto& c = setup_->circuit;
    const double w = 0.5 * c.bare_frequency();
    const double a = w * c.probe_impedance * c.coupling_capacitance;
    EXPECT_LT(std::abs(std::norm(s21(c, *table_, d, w)) - 1.0), 10 * a * a);

    const auto spec = resonance_spectrum(c, *table_, d);
    const double wr = spec.stark_freq;
    const cplx gr = g_retarded_res(c, *table_, d, wr);
    const cplx dip = s21(c, *table_, d, wr) - s21_from_green(c, wr, 0.0);
    EXPECT_LT(std::abs(dip - cplx{0.0, -0.5} * wr * wr * wr * c.probe_impedance * c.coupling_capacitance * c.coupling_capacitance * gr),
              1e-12);
}

TEST_F(TableOne, UndrivenResonanceNearBarePoleWithJosephsonInductance) {
    const auto& c = setup_->circuit;
    const DriveParams d = drive_at(32.0, 0.0);
    const auto s = resonance_spectrum(c, *table_, d);
    const double inv_l = 1.0 / c.inductance + inverse_inductance(*table_, d);
    const double pole = std::sqrt(inv_l / c.capacitance);
    EXPECT_NEAR(s.stark_freq / pole, 1.0, 0.01);
    EXPECT_FALSE(s.non_lorentzian);
}

TEST_F(TableOne, DriveShiftsResonance) {
    const auto& c = setup_->circuit;
    const double undriven = resonance_spectrum(c, *table_, drive_at(32.0, 0.0)).stark_freq;
    const auto driven = resonance_spectrum(c, *table_, drive_at(32.0));
    EXPECT_GT(std::abs(driven.stark_freq - undriven), 10.0 * driven.linewidth);
}

TEST_F(TableOne, LinewidthMatchesAdmittanceEstimate) {
    const auto& c = setup_->circuit;
    const auto d = drive_at(32.0);
    const auto s = resonance_spectrum(c, *table_, d);
    const double estimate = driven_admittance(*table_, d, 0, s.stark_freq).real() / c.capacitance;
    EXPECT_NEAR(s.linewidth / estimate, 1.0, 0.1);
}

TEST_F(TableOne, HeatFlowVanishesInEquilibrium) {
    const auto d = drive_at(32.0, 0.0);
    HeatPower p(setup_->circuit, *table_, d);
    const double ts = setup_->junction.temperature();
    EXPECT_LT(std::abs(p(ts)), 1e-4 * std::abs(p(2 * ts)));
}

TEST_F(TableOne, HeatFlowIncreasesWithProbeTemperature) {
    const auto& u = setup_->units;
    HeatPower p(setup_->circuit, *table_, drive_at(32.0));
    double prev = -1e300;
    for (int k = 0; k <= 16; ++k) {
        const double kelvin = 0.01 * std::pow(200.0, k / 16.0);
        const double v = p(u.kelvin_to_reduced(kelvin));
        EXPECT_GT(v, prev) << kelvin;
        prev = v;
    }
}

TEST_F(TableOne, HeatFlowAtBathTemperatureIsIntoResonatorWhenCooling) {
    HeatPower p(setup_->circuit, *table_, drive_at(32.0));
    EXPECT_GT(p(setup_->junction.temperature()), 0.0);
}

TEST_F(TableOne, EquilibriumQuasitemperature) {
    const auto& u = setup_->units;
    const double tr = quasitemperature(setup_->circuit, *table_, drive_at(32.0, 0.0), qtemp_options(u));
    EXPECT_NEAR(u.reduced_to_kelvin(tr), 0.2, 1e-3);
}

TEST_F(TableOne, QuasitemperatureIsRootOfHeatFlow) {
    const auto& u = setup_->units;
    const auto d = drive_at(32.0);
    const auto o = qtemp_options(u);
    const double tr = quasitemperature(setup_->circuit, *table_, d, o);
    HeatPower p(setup_->circuit, *table_, d);
    EXPECT_LT(p(tr - o.tol), 0.0);
    EXPECT_GT(p(tr + o.tol), 0.0);
}

TEST_F(TableOne, CoolingAndHeatingDrives) {
    const auto& u = setup_->units;
    const auto o = qtemp_options(u);
    const double ts = setup_->junction.temperature();
    EXPECT_LT(quasitemperature(setup_->circuit, *table_, drive_at(32.0), o), ts);
    EXPECT_GT(quasitemperature(setup_->circuit, *table_, drive_at(35.0), o), ts);
}

TEST_F(TableOne, BracketWithoutSignChangeThrows) {
    const auto& u = setup_->units;
    auto o = qtemp_options(u);
    o.t_hi = u.kelvin_to_reduced(2e-3);
    try {
        quasitemperature(setup_->circuit, *table_, drive_at(32.0), o);
        FAIL() << "expected NoSignChange";
    } catch (const NoSignChange& e) {
        EXPECT_LT(e.power_lo, 0.0);
        EXPECT_LT(e.power_hi, 0.0);
    }
}

TEST_F(TableOne, SingleCellSweepMatchesDirectCall) {
    const auto& u = setup_->units;
    const auto o = qtemp_options(u);
    const auto d = drive_at(33.0);
    const auto r = sweep_map(setup_->circuit, [&](const DriveParams&) -> const PolarizationTable& { return *table_; },
                             {d.drive_freq}, {d.amplitude}, 0.0, o, 1);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_EQ(r.points[0].status, "ok");
    EXPECT_EQ(r.points[0].quasitemperature, quasitemperature(setup_->circuit, *table_, d, o));
    const auto s = resonance_spectrum(setup_->circuit, *table_, d);
    EXPECT_EQ(r.points[0].linewidth, s.linewidth);
    EXPECT_EQ(r.points[0].stark_freq, s.stark_freq);
}

// Subgap tunneling at zero temperature needs Dynes states on both sides, so
// the width grows as the square of the rate.
TEST(ResonatorLinewidth, ControlledByDynesRateWhenCold) {
    double widths[2];
    int k = 0;
    for (double nu : {1e-4, 2e-4}) {
        GridSpec g;
        g.omega_max = 0.5;
        const auto t = build_table(symmetric_junction(0.0, 1.0, nu), g);
        const ResonatorCircuit c{1.0, 100.0, 0.0, 1.0, 0.0};
        widths[k++] = resonance_spectrum(c, t, DriveParams{}).linewidth;
    }
    EXPECT_NEAR(std::log2(widths[1] / widths[0]), 2.0, 0.05);
}
