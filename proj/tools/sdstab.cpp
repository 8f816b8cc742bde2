#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sdstab/harness/csv.hpp"
#include "sdstab/harness/description.hpp"
#include "sdstab/harness/pipeline.hpp"

namespace {

struct Args {
    std::string input;
    std::string out;
    std::optional<double> tau;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Args& a) {
    cmd->add_option("--input", a.input, "System description (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "Output directory for report.json and CSV files");
    cmd->add_option("--tau", a.tau, "Evaluate at this sampling period instead of tau*/2");
    cmd->add_option("--seed", a.seed, "Override the description seed");
}

int run(sdstab::harness::Mode mode, const Args& a) {
    using namespace sdstab::harness;
    SystemDescription desc;
    try {
        desc = load_description(a.input);
    } catch (const DescriptionError& e) {
        std::cerr << a.input << ": " << e.what() << "\n";
        return 1;
    }
    PipelineOptions opt;
    opt.mode = mode;
    opt.tau = a.tau;
    opt.seed = a.seed;
    const auto rep = run_pipeline(desc, opt);

    if (a.out.empty()) {
        std::cout << rep.dump();
    } else {
        const std::filesystem::path dir(a.out);
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "report.json", std::ios::binary) << rep.dump();
        for (const auto& name : csv_series_names()) {
            try {
                emit_csv(rep, name, dir);
            } catch (const MissingSeries&) {
            }
        }
        const auto& v = rep.document["verdict"];
        std::cout << to_string(mode) << ": " << (rep.passed ? "passed" : "failed");
        if (!v["reason"].is_null()) std::cout << " (" << v["reason"].get<std::string>() << ")";
        std::cout << "\n";
    }
    return rep.exit_code();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampled-data stability certificates for diagonal Riesz-spectral systems"};
    app.set_version_flag("--version", std::string(sdstab::harness::tool_version));
    app.require_subcommand(1);

    Args args;
    sdstab::harness::Mode mode = sdstab::harness::Mode::check;
    struct Sub {
        const char* name;
        const char* help;
        sdstab::harness::Mode mode;
    };
    const Sub subs[] = {
        {"check", "Run the full certificate pipeline", sdstab::harness::Mode::check},
        {"simulate", "Sampled-data trajectory only", sdstab::harness::Mode::simulate},
        {"scan", "Transfer-function scans and tau*", sdstab::harness::Mode::scan},
        {"place", "Pole placement and feedback assembly only", sdstab::harness::Mode::place},
    };
    for (const auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, args);
        cmd->callback([&mode, m = s.mode] { mode = m; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        return run(mode, args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
