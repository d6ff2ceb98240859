#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "qpj/tasks.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message, const std::vector<std::string>& details = {}) {
    nlohmann::json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
    if (!details.empty()) j["details"] = details;
    std::cerr << j.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dissipation, noise and memory of a driven Josephson junction shunting an LC resonator"};
    std::string task, config_path, out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("task", task, "task to run")->required()->check(CLI::IsMember(qpj::task_names()));
    app.add_option("--config", config_path, "INI configuration file")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides numerics.seed)");
    app.add_option("--threads", threads, "worker threads (falls back to QPJ_THREADS)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, "UsageError", e.what());
    }

    try {
        std::ifstream in(config_path);
        if (!in) return fail(2, "ParseError", "cannot open config file " + config_path);
        qpj::TaskContext ctx;
        ctx.config = qpj::parse_config(in);
        ctx.task = task;
        ctx.out_dir = out_dir;
        ctx.seed = *seed_opt ? seed : static_cast<std::uint64_t>(ctx.config.numerics.seed);
        ctx.threads = qpj::resolve_threads(threads > 0 ? threads : static_cast<unsigned>(ctx.config.numerics.threads));
        qpj::run_task(ctx);
        for (const auto& f : ctx.written) std::cout << f << "\n";
        return 0;
    } catch (const qpj::ValidationError& e) {
        return fail(2, e.kind(), e.what(), e.messages);
    } catch (const qpj::NumericError& e) {
        return fail(3, e.kind(), e.what());
    } catch (const qpj::Error& e) {
        return fail(e.kind() == "ParseError" || e.kind() == "TemperatureMismatch" ? 2 : 3, e.kind(), e.what());
    } catch (const std::exception& e) {
        return fail(3, "InternalError", e.what());
    }
}
