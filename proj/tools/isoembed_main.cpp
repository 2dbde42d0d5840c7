// Command-line driver: run the embedding pipeline on a metric formula,
// replay the constant-metric example, re-check stored artifacts, or sweep
// a family of metrics.  Configuration comes from a TOML file with
// command-line overrides; ISOEMBED_LOG=debug enables stage logging.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isoembed/pipeline.hpp"

namespace {

bool g_debug = false;

void log_debug(const std::string& msg) {
    if (g_debug) std::cerr << "[isoembed] " << msg << "\n";
}

struct CliOptions {
    std::string ghat = "1";
    std::string delta = "auto";
    std::string grid = "41x41";
    std::string domain = "-2,2,-2,2";
    double smax = 0.5;
    std::string out = "out";
    std::string in_dir = "out";
    double epsilon = 0.5;
    std::vector<std::string> family;
};

isoembed::PipelineConfig to_config(const CliOptions& o) {
    isoembed::PipelineConfig cfg;
    cfg.ghat_formula = o.ghat;
    if (o.delta != "auto") cfg.delta = std::stod(o.delta);
    cfg.s_max = o.smax;
    cfg.out_dir = o.out;
    if (std::sscanf(o.grid.c_str(), "%dx%d", &cfg.grid_nu, &cfg.grid_nv) != 2)
        throw CLI::ValidationError("--grid", "expected NxM, e.g. 41x41");
    double d[4];
    if (std::sscanf(o.domain.c_str(), "%lf,%lf,%lf,%lf", d, d + 1, d + 2, d + 3) != 4)
        throw CLI::ValidationError("--domain", "expected x0,x1,y0,y1");
    cfg.domain = {d[0], d[1], d[2], d[3]};
    return cfg;
}

int cmd_embed(const CliOptions& o) {
    const isoembed::PipelineConfig cfg = to_config(o);
    log_debug("running pipeline for Ghat = " + cfg.ghat_formula);
    const isoembed::PipelineResult res = isoembed::run_pipeline(cfg);
    std::cout << "delta = " << isoembed::format_double(res.delta) << "\n";
    std::cout << "working subdomain vhat in [" << isoembed::format_double(res.working.y0) << ", "
              << isoembed::format_double(res.working.y1) << "]\n";
    std::cout << "reality margin at origin = " << isoembed::format_double(res.margin_at_origin)
              << "\n";
    if (res.reality_at_start) {
        std::cout << "halted: reality violation at s = 0 (flagged; artifacts written)\n";
        return 0;
    }
    const isoembed::ODETrajectory& t = *res.trajectory;
    std::cout << "trajectory reached s = " << isoembed::format_double(t.s_end())
              << (t.truncated() ? " (truncated: " + t.truncation_reason() + ")" : "") << "\n";
    if (res.report) {
        std::cout << "on-curve  max |E-R| = "
                  << isoembed::format_double(res.report->on_curve_E_minus_R.max)
                  << ", max |G-S| = "
                  << isoembed::format_double(res.report->on_curve_G_minus_S.max) << "\n";
        std::cout << "off-curve max |E-R| = "
                  << isoembed::format_double(res.report->off_curve_E_minus_R.max)
                  << ", max |G-S| = "
                  << isoembed::format_double(res.report->off_curve_G_minus_S.max) << "\n";
        std::cout << "intrinsic K range [" << isoembed::format_double(res.K_domain_min) << ", "
                  << isoembed::format_double(res.K_domain_max) << "], surface K range ["
                  << isoembed::format_double(res.report->K_surface_min) << ", "
                  << isoembed::format_double(res.report->K_surface_max) << "]\n";
    }
    if (!cfg.out_dir.empty()) std::cout << "artifacts written to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_example(const CliOptions& o) {
    const isoembed::ConstantMetricReport rep =
        isoembed::constant_metric_regression(o.epsilon, 41, o.out);
    std::cout << "epsilon = " << isoembed::format_double(rep.epsilon)
              << ", margin at origin = " << isoembed::format_double(rep.margin_at_origin) << "\n";
    if (rep.reality_failure) {
        std::cout << (rep.passed ? "reality violation at s = 0, as expected for this epsilon\n"
                                 : "unexpected reality violation at s = 0\n");
        return rep.passed ? 0 : 1;
    }
    std::cout << "max |J + 2 eps|    = " << isoembed::format_double(rep.max_J_err) << "\n";
    std::cout << "max |a(s) - s|     = " << isoembed::format_double(rep.max_a_err) << "\n";
    std::cout << "max |b(s) - beta s| = " << isoembed::format_double(rep.max_b_err) << "\n";
    std::cout << "max |E - 1/2|      = " << isoembed::format_double(rep.max_E_err) << "\n";
    std::cout << "max |G - G_exact|  = " << isoembed::format_double(rep.max_G_err) << "\n";
    std::cout << "max induced defect = " << isoembed::format_double(rep.max_induced_err) << "\n";
    std::cout << (rep.passed ? "example regression: PASS\n"
                             : "example regression: FAIL (" + rep.failure + ")\n");
    return rep.passed ? 0 : 1;
}

int cmd_verify(const CliOptions& o) {
    const isoembed::ArtifactCheck chk = isoembed::verify_artifacts(o.in_dir);
    if (!chk.error.empty()) std::cout << "error: " << chk.error << "\n";
    std::cout << "nodes checked            = " << chk.nodes_checked << "\n";
    std::cout << "max induced-form diff    = " << isoembed::format_double(chk.max_induced_diff)
              << "\n";
    std::cout << "max surface-curvature diff = "
              << isoembed::format_double(chk.max_curvature_diff) << "\n";
    std::cout << (chk.ok ? "stored artifacts verify: PASS\n" : "stored artifacts verify: FAIL\n");
    return chk.ok ? 0 : 1;
}

int cmd_sweep(const CliOptions& o) {
    std::vector<isoembed::SweepEntry> entries;
    for (const std::string& item : o.family) {
        isoembed::SweepEntry e;
        const size_t at = item.rfind('@');
        if (at == std::string::npos) {
            e.formula = item;
        } else {
            e.formula = item.substr(0, at);
            std::string d = item.substr(at + 1);
            // trim
            while (!d.empty() && d.front() == ' ') d.erase(d.begin());
            while (!d.empty() && d.back() == ' ') d.pop_back();
            if (d != "auto" && !d.empty()) e.delta = std::stod(d);
        }
        while (!e.formula.empty() && e.formula.back() == ' ') e.formula.pop_back();
        entries.push_back(std::move(e));
    }
    isoembed::PipelineConfig base = to_config(o);
    base.out_dir.clear();
    const std::vector<isoembed::SweepRow> rows = isoembed::sweep(base, entries);
    const std::string csv = isoembed::sweep_csv(rows);
    std::cout << csv;
    if (!o.out.empty()) {
        std::filesystem::create_directories(o.out);
        std::ofstream f(std::filesystem::path(o.out) / "sweep.csv");
        f << csv;
        std::cout << "sweep table written to " << o.out << "/sweep.csv\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* lvl = std::getenv("ISOEMBED_LOG")) g_debug = std::string(lvl) == "debug";

    CLI::App app{"Isometric embedding of 2-metrics given in geodesic parameters"};
    app.require_subcommand(1);
    // Config keys live in [embed] / [sweep] sections of a TOML file;
    // command-line flags override them.
    app.set_config("--config", "", "TOML configuration file");
    CliOptions o;

    CLI::App* embed = app.add_subcommand("embed", "run the full pipeline on a metric formula");
    embed->fallthrough();
    embed->add_option("--ghat", o.ghat, "metric component Ghat(uhat, vhat)");
    embed->add_option("--delta", o.delta, "initial slope for the second Cauchy datum, or 'auto'");
    embed->add_option("--grid", o.grid, "surface grid, NxM");
    embed->add_option("--smax", o.smax, "arc-length extent of the initial-data system");
    embed->add_option("--domain", o.domain, "uhat/vhat rectangle: x0,x1,y0,y1");
    embed->add_option("--out", o.out, "output directory");

    CLI::App* example = app.add_subcommand("example", "replay the constant-metric example");
    example->fallthrough();
    example->add_option("--epsilon", o.epsilon, "slope of the second Cauchy datum");
    example->add_option("--out", o.out, "output directory (optional)")->default_val("");

    CLI::App* verify = app.add_subcommand("verify", "re-check stored artifacts");
    verify->fallthrough();
    verify->add_option("--in", o.in_dir, "directory with report.json and surface.csv");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a family of metrics");
    sweep_cmd->fallthrough();
    sweep_cmd->add_option("--family", o.family,
                          "entries 'formula' or 'formula @ delta' (delta may be 'auto')");
    sweep_cmd->add_option("--grid", o.grid, "surface grid, NxM");
    sweep_cmd->add_option("--smax", o.smax, "arc-length extent");
    sweep_cmd->add_option("--domain", o.domain, "uhat/vhat rectangle: x0,x1,y0,y1");
    sweep_cmd->add_option("--out", o.out, "output directory for sweep.csv")->default_val("");

    CLI11_PARSE(app, argc, argv);

    try {
        if (embed->parsed()) return cmd_embed(o);
        if (example->parsed()) return cmd_example(o);
        if (verify->parsed()) return cmd_verify(o);
        if (sweep_cmd->parsed()) return cmd_sweep(o);
    } catch (const isoembed::pipeline_error& e) {
        std::cerr << "pipeline error " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
