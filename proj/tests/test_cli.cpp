#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "qpj/config.hpp"

using namespace qpj;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig default_config() {
    std::ifstream in(std::string(QPJ_SOURCE_DIR) + "/configs/default.ini");
    return parse_config(in);
}

const char* kMinimal = R"(
[junction]
gap_left_meV = 0.2
gap_right_meV = 0.2
resistance_kohm = 30
temperature_K = 0.2
[circuit]
capacitance_fF = 637
inductance_nH = 1.59
)";

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("qpj_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& name, const std::string& text) const {
        const auto p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    CliRun run(const std::string& args, const fs::path& out_dir) const {
        fs::create_directories(out_dir);
        const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = std::string(QPJ_CLI) + " " + args + " --out " + out_dir.string() + " >" + out.string() +
                                " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        CliRun r;
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = read_file(out);
        r.err = read_file(err);
        return r;
    }

    fs::path dir_;
};

}  // namespace

TEST(Config, DefaultFileIsTableOne) {
    const auto c = default_config();
    EXPECT_EQ(c.junction.gap_left_meV, 0.2);
    EXPECT_EQ(c.junction.resistance_kohm, 30.0);
    EXPECT_EQ(c.circuit.capacitance_fF, 637.0);
    EXPECT_EQ(c.circuit.inductance_nH, 1.59);
    const auto s = to_reduced_units(c);
    const double f_r = s.units.reduced_to_hz(s.circuit.bare_frequency());
    EXPECT_NEAR(f_r / 1e9, 5.0, 0.05);
    EXPECT_NEAR(s.junction.temperature(), 0.0430867, 1e-6);
    EXPECT_NEAR(s.units.quantum_ratio(), 0.215107, 1e-6);
    EXPECT_NEAR(s.circuit.probe_temperature, s.junction.temperature(), 1e-15);
}

TEST(Config, EmptyFileListsRequiredKeys) {
    try {
        parse_config_string("");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        std::string all;
        for (const auto& m : e.messages) all += m + "\n";
        for (const char* key : {"gap_left_meV", "gap_right_meV", "resistance_kohm", "temperature_K", "capacitance_fF",
                                "inductance_nH"})
            EXPECT_NE(all.find(key), std::string::npos) << key;
    }
}

TEST(Config, UnknownKeysAndBadNumbersAreReported) {
    try {
        parse_config_string(std::string(kMinimal) + "[drive]\nfrequncy_GHz = 32\namplitude_mV = abc\n[extra]\nx = 1\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        std::string all;
        for (const auto& m : e.messages) all += m + "\n";
        EXPECT_NE(all.find("frequncy_GHz"), std::string::npos);
        EXPECT_NE(all.find("amplitude_mV"), std::string::npos);
        EXPECT_NE(all.find("extra"), std::string::npos);
    }
}

TEST(Config, OutOfRangeValuesAreRejected) {
    EXPECT_THROW(parse_config_string(std::string(kMinimal) + "[numerics]\nmc_trajectories = 2.5\n"), ValidationError);
    std::string neg = kMinimal;
    neg.replace(neg.find("637"), 3, "-1");
    EXPECT_THROW(parse_config_string(neg), ValidationError);
    EXPECT_NO_THROW(parse_config_string(kMinimal));
}

TEST(Config, HashTracksContent) {
    const auto a = parse_config_string(kMinimal);
    auto b = a;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.drive.frequency_GHz = 33.0;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Units, Conversions) {
    const ReducedUnits u{0.4e-3 * si::electron_volt, 30e3};
    EXPECT_NEAR(u.reduced_to_hz(1.0) / 1e9, 96.72, 0.01);
    EXPECT_NEAR(u.kelvin_to_reduced(0.2), 0.0430867, 1e-6);
    EXPECT_NEAR(u.volt_to_reduced_energy(0.2e-3), 0.5, 1e-12);
    EXPECT_NEAR(u.capacitance(), 5.485e-17, 1e-19);
    EXPECT_NEAR(u.inductance(), 4.937e-8, 1e-10);
    for (double x : {1e-3, 0.37, 12.0}) {
        EXPECT_NEAR(u.hz_to_reduced(u.reduced_to_hz(x)) / x, 1.0, 1e-12);
        EXPECT_NEAR(u.kelvin_to_reduced(u.reduced_to_kelvin(x)) / x, 1.0, 1e-12);
        EXPECT_NEAR(u.volt_to_reduced_energy(u.reduced_energy_to_volt(x)) / x, 1.0, 1e-12);
    }
}

TEST(Units, PhaseBiasAndRoundTrip) {
    auto c = default_config();
    c.drive.phase_bias_pi = 1.0;
    const auto s = to_reduced_units(c);
    EXPECT_DOUBLE_EQ(s.drive.phase_bias, std::numbers::pi);
    const auto back = to_si(s, c);
    EXPECT_NEAR(back.junction.gap_left_meV / c.junction.gap_left_meV, 1.0, 1e-12);
    EXPECT_NEAR(back.junction.temperature_K / c.junction.temperature_K, 1.0, 1e-12);
    EXPECT_NEAR(back.drive.amplitude_mV / c.drive.amplitude_mV, 1.0, 1e-12);
    EXPECT_NEAR(back.drive.frequency_GHz / c.drive.frequency_GHz, 1.0, 1e-12);
    EXPECT_NEAR(back.drive.phase_bias_pi, 1.0, 1e-12);
    EXPECT_NEAR(back.circuit.capacitance_fF / c.circuit.capacitance_fF, 1.0, 1e-12);
    EXPECT_NEAR(back.circuit.inductance_nH / c.circuit.inductance_nH, 1.0, 1e-12);
}

TEST_F(CliTest, AdmittanceOutputIsDeterministic) {
    const auto cfg = write_config("run.ini", std::string(kMinimal) + "[numerics]\nadmittance_points = 101\n");
    const auto a = run("admittance --config " + cfg.string(), dir_ / "a");
    const auto b = run("admittance --config " + cfg.string(), dir_ / "b");
    ASSERT_EQ(a.exit_code, 0) << a.err;
    ASSERT_EQ(b.exit_code, 0) << b.err;
    const auto fa = read_file(dir_ / "a" / "admittance.csv"), fb = read_file(dir_ / "b" / "admittance.csv");
    EXPECT_FALSE(fa.empty());
    EXPECT_EQ(fa, fb);
    EXPECT_NE(fa.find("frequency_Hz,omega,re_Y,im_Y"), std::string::npos);
    EXPECT_NE(a.out.find("admittance.csv"), std::string::npos);
}

TEST_F(CliTest, MissingConfigFileExitsWithTwo) {
    const auto r = run("admittance --config " + (dir_ / "nope.ini").string(), dir_ / "o");
    EXPECT_EQ(r.exit_code, 2);
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["exit_code"], 2);
}

TEST_F(CliTest, InvalidConfigExitsWithTwoAndListsProblems) {
    const auto cfg = write_config("bad.ini", "[junction]\ngap_left_meV = 0.2\n");
    const auto r = run("spectrum --config " + cfg.string(), dir_ / "o");
    EXPECT_EQ(r.exit_code, 2);
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["error"], "ValidationError");
    EXPECT_GE(j["details"].size(), 5u);
}

TEST_F(CliTest, UnknownTaskExitsWithTwo) {
    const auto cfg = write_config("run.ini", kMinimal);
    EXPECT_EQ(run("frobnicate --config " + cfg.string(), dir_ / "o").exit_code, 2);
}

TEST_F(CliTest, NumericFailureExitsWithThree) {
    // a large resonator inductance against a pi-biased junction leaves no positive inductance
    std::string text = kMinimal;
    text.replace(text.find("1.59"), 4, "1000");
    text += "[drive]\nphase_bias_pi = 1\n";
    const auto cfg = write_config("pi.ini", text);
    const auto r = run("spectrum --config " + cfg.string(), dir_ / "o");
    EXPECT_EQ(r.exit_code, 3) << r.err;
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["error"], "ResonanceNotFound");
}
