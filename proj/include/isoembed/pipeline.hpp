#pragma once

// End-to-end orchestration: formula -> characteristic solutions ->
// parameter map -> level components -> initial-data ODE -> surface ->
// residual report, plus artifact output (OBJ/CSV mesh, JSON report,
// per-field CSV grids), batch sweeps, and the constant-metric regression.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isoembed/characteristics.hpp"
#include "isoembed/components.hpp"
#include "isoembed/embedding.hpp"
#include "isoembed/expr.hpp"
#include "isoembed/metric.hpp"
#include "isoembed/ode.hpp"
#include "isoembed/transform.hpp"
#include "isoembed/verify.hpp"

namespace isoembed {

class pipeline_error : public std::runtime_error {
public:
    pipeline_error(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct PipelineConfig {
    std::string ghat_formula = "1";
    Rect domain{-2.0, 2.0, -2.0, 2.0};
    std::optional<double> delta;  // empty = auto via choose_hhat
    double auto_margin = 0.5;
    double s_max = 0.5;
    int grid_nu = 41;
    int grid_nv = 41;
    std::string out_dir;  // empty = keep results in memory only
};

struct PipelineResult {
    PipelineConfig config;
    double delta = 0.0;
    Rect working{};
    double det_on_line_min = 0.0, det_on_line_max = 0.0;
    double margin_at_origin = 0.0;
    double margin_variant_at_origin = 0.0;  // G^2+1 denominator variant
    bool reality_variants_disagree = false;
    bool reality_at_start = false;  // halted before integration; flagged, not an error
    double K_domain_min = 0.0, K_domain_max = 0.0;
    std::pair<double, double> resubstitution{0.0, 0.0};
    std::optional<ComponentPair> components;
    std::optional<ODETrajectory> trajectory;
    std::optional<OrthogonalMetric> eg;
    std::optional<EmbeddedSurface> surface;
    std::optional<ResidualReport> report;
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const pipeline_error&) {
        throw;
    } catch (const std::exception& e) {
        throw pipeline_error(name, e.what());
    }
}

inline nlohmann::json grid_json(const GridField& g, int nu, int nv) {
    nlohmann::json out;
    out["dims"] = {nu, nv};
    out["layout"] = "row-major, u fastest";
    nlohmann::json data = nlohmann::json::array();
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) data.push_back(g.at(i, j));
    out["data"] = std::move(data);
    return out;
}

inline nlohmann::json stat_json(const SummaryStat& s) {
    return {{"max", s.max}, {"mean", s.mean}, {"count", s.count}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out.good()) throw std::runtime_error("write failure on '" + path.string() + "'");
}

inline void write_field_csv(const std::filesystem::path& path, const GridField& g, int nu, int nv,
                            const EmbeddedSurface& surf) {
    std::ostringstream out;
    out << "u,v,value\n";
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i)
            out << format_double(surf.uat(i)) << ',' << format_double(surf.vat(j)) << ','
                << format_double(g.at(i, j)) << '\n';
    write_text(path, out.str());
}

} // namespace detail

inline nlohmann::json report_to_json(const PipelineResult& res) {
    nlohmann::json j;
    j["config"] = {
        {"ghat", res.config.ghat_formula},
        {"domain", {res.config.domain.x0, res.config.domain.x1, res.config.domain.y0,
                    res.config.domain.y1}},
        {"delta", res.delta},
        {"delta_auto", !res.config.delta.has_value()},
        {"s_max", res.config.s_max},
        {"grid", {res.config.grid_nu, res.config.grid_nv}},
    };
    j["jacobian"] = {{"det_on_line_min", res.det_on_line_min},
                     {"det_on_line_max", res.det_on_line_max}};
    j["working_subdomain"] = {res.working.x0, res.working.x1, res.working.y0, res.working.y1};
    j["curvature_intrinsic_range"] = {res.K_domain_min, res.K_domain_max};
    j["reality"] = {{"margin_at_origin", res.margin_at_origin},
                    {"margin_variant_at_origin", res.margin_variant_at_origin},
                    {"variants_disagree_at_origin", res.reality_variants_disagree},
                    {"halted_at_start", res.reality_at_start}};

    if (res.trajectory) {
        const ODETrajectory& t = *res.trajectory;
        j["trajectory"] = {
            {"s_end", t.s_end()},
            {"samples", t.samples().size()},
            {"truncated", t.truncated()},
            {"truncation_reason", t.truncation_reason()},
            {"truncation_s", t.truncation_s()},
            {"halving_error", t.halving_error()},
            {"a_end", t.samples().back().a},
            {"b_end", t.samples().back().b},
            {"resubstitution_residual", {res.resubstitution.first, res.resubstitution.second}},
        };
    }

    if (res.report) {
        const ResidualReport& r = *res.report;
        j["grid"] = {{"nu", r.nu},
                     {"nv", r.nv},
                     {"u_range", {r.uv_box.x0, r.uv_box.x1}},
                     {"v_range", {r.uv_box.y0, r.uv_box.y1}}};
        j["on_curve"] = {
            {"samples", r.curve_s.size()},
            {"E_minus_R", detail::stat_json(r.on_curve_E_minus_R)},
            {"G_minus_S", detail::stat_json(r.on_curve_G_minus_S)},
            {"Eind_minus_R", detail::stat_json(r.on_curve_Eind_minus_R)},
            {"Gind_minus_S", detail::stat_json(r.on_curve_Gind_minus_S)},
            {"min_margin", r.min_margin_on_curve},
        };
        j["off_curve"] = {
            {"E_minus_R", detail::stat_json(r.off_curve_E_minus_R)},
            {"G_minus_S", detail::stat_json(r.off_curve_G_minus_S)},
            {"Eind_minus_R", detail::stat_json(r.off_curve_Eind_minus_R)},
            {"F_ind", detail::stat_json(r.off_curve_F_ind)},
            {"Gind_minus_S", detail::stat_json(r.off_curve_Gind_minus_S)},
        };
        j["induced"] = {
            {"E_defect", detail::stat_json(r.induced_E_defect)},
            {"F_defect", detail::stat_json(r.induced_F_defect)},
            {"G_defect", detail::stat_json(r.induced_G_defect)},
        };
        j["curvature"] = {
            {"intrinsic_on_grid", {r.K_intrinsic_min, r.K_intrinsic_max}},
            {"surface", {r.K_surface_min, r.K_surface_max}},
            {"brioschi_vs_surface", detail::stat_json(r.brioschi_vs_surface)},
        };
        j["flags"] = {
            {"reality_violation", r.reality_violation},
            {"reality_violation_s", r.reality_violation_s},
            {"truncation_reason", r.truncation_reason},
            {"S_le_1_somewhere", r.S_le_1_somewhere},
            {"S_min", r.S_min},
            {"domain_exit_nodes", r.domain_exit_nodes},
            {"surface_holes", r.surface_holes},
            {"covered_nodes", r.covered_nodes},
        };
        j["fields"] = {
            {"E", detail::grid_json(r.E, r.nu, r.nv)},
            {"G", detail::grid_json(r.G, r.nu, r.nv)},
            {"R", detail::grid_json(r.R, r.nu, r.nv)},
            {"S", detail::grid_json(r.S, r.nu, r.nv)},
            {"abs_E_minus_R", detail::grid_json(r.abs_E_minus_R, r.nu, r.nv)},
            {"abs_G_minus_S", detail::grid_json(r.abs_G_minus_S, r.nu, r.nv)},
            {"E_ind", detail::grid_json(r.E_ind, r.nu, r.nv)},
            {"F_ind", detail::grid_json(r.F_ind, r.nu, r.nv)},
            {"G_ind", detail::grid_json(r.G_ind, r.nu, r.nv)},
            {"abs_Eind_minus_R", detail::grid_json(r.abs_Eind_minus_R, r.nu, r.nv)},
            {"abs_F_ind", detail::grid_json(r.abs_F_ind, r.nu, r.nv)},
            {"abs_Gind_minus_S", detail::grid_json(r.abs_Gind_minus_S, r.nu, r.nv)},
            {"K_surface", detail::grid_json(r.K_surface, r.nu, r.nv)},
            {"K_intrinsic", detail::grid_json(r.K_intrinsic, r.nu, r.nv)},
            {"K_brioschi", detail::grid_json(r.K_brioschi, r.nu, r.nv)},
        };
    } else {
        j["flags"] = {{"reality_violation", res.reality_at_start},
                      {"reality_violation_s", 0.0}};
    }
    return j;
}

inline void write_artifacts(const PipelineResult& res) {
    namespace fs = std::filesystem;
    if (res.config.out_dir.empty()) return;
    const fs::path dir(res.config.out_dir);
    fs::create_directories(dir);
    detail::write_text(dir / "report.json", report_to_json(res).dump(2) + "\n");
    if (res.surface) {
        export_mesh(*res.surface, (dir / "surface.obj").string(), MeshFormat::Obj);
        export_mesh(*res.surface, (dir / "surface.csv").string(), MeshFormat::Csv);
    }
    if (res.report) {
        const fs::path fdir = dir / "fields";
        fs::create_directories(fdir);
        const ResidualReport& r = *res.report;
        const EmbeddedSurface& s = *res.surface;
        detail::write_field_csv(fdir / "E.csv", r.E, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "G.csv", r.G, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "R.csv", r.R, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "S.csv", r.S, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "abs_E_minus_R.csv", r.abs_E_minus_R, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "abs_G_minus_S.csv", r.abs_G_minus_S, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "E_ind.csv", r.E_ind, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "F_ind.csv", r.F_ind, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "G_ind.csv", r.G_ind, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "abs_Eind_minus_R.csv", r.abs_Eind_minus_R, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "abs_F_ind.csv", r.abs_F_ind, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "abs_Gind_minus_S.csv", r.abs_Gind_minus_S, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "K_surface.csv", r.K_surface, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "K_intrinsic.csv", r.K_intrinsic, r.nu, r.nv, s);
        detail::write_field_csv(fdir / "K_brioschi.csv", r.K_brioschi, r.nu, r.nv, s);
    }
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
    if (cfg.domain.degenerate()) throw pipeline_error("config", "degenerate domain rectangle");
    if (cfg.grid_nu < 3 || cfg.grid_nv < 3)
        throw pipeline_error("config", "grid must be at least 3x3");
    if (!(cfg.s_max > 0.0)) throw pipeline_error("config", "s_max must be positive");

    PipelineResult res;
    res.config = cfg;

    const Expression ghat_expr =
        detail::stage("parse", [&] { return Expression::parse(cfg.ghat_formula); });
    const GeodesicMetric metric = detail::stage(
        "metric", [&] { return GeodesicMetric::from_expression(ghat_expr, cfg.domain); });

    const CharacteristicSolution u_sol = detail::stage("characteristics", [&] {
        return solve_u_hat(
            InitialData1D::identity(cfg.domain.x0 + cfg.domain.y0, cfg.domain.x1 + cfg.domain.y1),
            cfg.domain);
    });
    res.delta = detail::stage("characteristics", [&] {
        return cfg.delta ? *cfg.delta
                         : choose_hhat(metric.ghat(), cfg.domain, cfg.auto_margin).delta;
    });
    const CharacteristicSolution v_sol = detail::stage("characteristics", [&] {
        return solve_v_hat(metric.ghat(),
                           InitialData1D::linear(res.delta, cfg.domain.x0, cfg.domain.x1));
    });

    const ParamMap2 forward = assemble(u_sol, v_sol);
    detail::stage("transform", [&] {
        res.working = working_subdomain(forward);
        double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
        for (int i = 0; i < 65; ++i) {
            const double det = forward.jacobian_det(
                {cfg.domain.x0 + cfg.domain.width() * i / 64.0, 0.0});
            dmin = std::min(dmin, det);
            dmax = std::max(dmax, det);
        }
        res.det_on_line_min = dmin;
        res.det_on_line_max = dmax;
        return 0;
    });

    res.components = detail::stage("components", [&] {
        return cramer_RS(metric.ghat(), u_sol, v_sol, forward, res.working);
    });
    const LevelComponents& comps = res.components->components;

    // Intrinsic curvature range over the working subdomain.
    detail::stage("verify", [&] {
        const ScalarField2 K = gaussian_curvature(metric);
        double kmin = std::numeric_limits<double>::infinity(), kmax = -kmin;
        for (int j = 0; j < 33; ++j)
            for (int i = 0; i < 33; ++i) {
                const double k = K(res.working.x0 + res.working.width() * i / 32.0,
                                   res.working.y0 + res.working.height() * j / 32.0);
                kmin = std::min(kmin, k);
                kmax = std::max(kmax, k);
            }
        res.K_domain_min = kmin;
        res.K_domain_max = kmax;
        return 0;
    });

    detail::stage("ode", [&] {
        const LevelPoint origin = comps.at({0.0, 0.0}, {0.0, 0.0});
        res.margin_at_origin = reality_margin(origin);
        res.margin_variant_at_origin = reality_margin_variant(origin.ghat, origin.hhat_v);
        res.reality_variants_disagree =
            (res.margin_at_origin > 0.0) != (res.margin_variant_at_origin > 0.0);
        return 0;
    });
    if (!(res.margin_at_origin > 0.0)) {
        // Reality fails before integration: flagged, not an error.
        res.reality_at_start = true;
        write_artifacts(res);
        return res;
    }

    res.trajectory = detail::stage("ode", [&] { return integrate(comps, cfg.s_max); });
    res.resubstitution = detail::stage(
        "ode", [&] { return resubstitution_residual(*res.trajectory, comps); });

    const InitialData1D a = res.trajectory->a_data();
    const InitialData1D b = res.trajectory->b_data();
    const double a_end = res.trajectory->samples().back().a;
    const double b_end = res.trajectory->samples().back().b;
    if (a_end > 0.0 && b_end > 0.0) {
        res.eg = detail::stage("embedding", [&] { return EG_from_ab(a, b); });
        const Rect box{0.0, a_end, 0.0, b_end};
        res.surface = detail::stage("embedding", [&] {
            return build_surface(a, b, cfg.grid_nu, cfg.grid_nv, box);
        });
        res.report = detail::stage("verify", [&] {
            ClaimInputs in;
            in.metric = &metric;
            in.comps = &comps;
            in.traj = &*res.trajectory;
            in.eg = &*res.eg;
            in.surf = &*res.surface;
            in.a_data = &a;
            in.b_data = &b;
            return check_claim(in);
        });
    }

    detail::stage("write", [&] {
        write_artifacts(res);
        return 0;
    });
    return res;
}

// ---------------------------------------------------------------------------
// Re-run the surface checks on stored artifacts: load surface.csv and
// report.json from a run directory, recompute the induced form and the
// surface curvature from the stored vertices, and compare with the stored
// fields.  The stored numbers are shortest-round-trip decimals, so the
// recomputation must agree to rounding.

struct ArtifactCheck {
    bool ok = false;
    int nodes_checked = 0;
    double max_induced_diff = 0.0;
    double max_curvature_diff = 0.0;
    std::string error;
};

inline ArtifactCheck verify_artifacts(const std::string& dir, double tol = 1e-12) {
    namespace fs = std::filesystem;
    ArtifactCheck out;
    try {
        std::ifstream jin(fs::path(dir) / "report.json");
        if (!jin) throw std::runtime_error("missing report.json");
        nlohmann::json j = nlohmann::json::parse(jin);
        if (!j.contains("grid")) throw std::runtime_error("report has no surface grid (run halted early?)");
        const int nu = j["grid"]["nu"].get<int>();
        const int nv = j["grid"]["nv"].get<int>();
        const Rect box{j["grid"]["u_range"][0].get<double>(), j["grid"]["u_range"][1].get<double>(),
                       j["grid"]["v_range"][0].get<double>(), j["grid"]["v_range"][1].get<double>()};

        std::ifstream sin(fs::path(dir) / "surface.csv");
        if (!sin) throw std::runtime_error("missing surface.csv");
        std::string line;
        std::getline(sin, line);  // header
        EmbeddedSurface surf(nu, nv, box);
        for (int j2 = 0; j2 < nv; ++j2)
            for (int i = 0; i < nu; ++i) {
                if (!std::getline(sin, line))
                    throw std::runtime_error("surface.csv truncated");
                double vals[5];
                size_t pos = 0;
                for (int k = 0; k < 5; ++k) {
                    size_t next = line.find(',', pos);
                    vals[k] = std::stod(line.substr(pos, next - pos));
                    pos = (next == std::string::npos) ? line.size() : next + 1;
                }
                surf.point(i, j2) = {vals[2], vals[3], vals[4]};
                surf.set_valid(i, j2, std::isfinite(vals[2]) && std::isfinite(vals[3]));
            }

        auto field = [&](const char* name) {
            std::vector<double> data;
            for (const auto& v : j["fields"][name]["data"])
                data.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                           : v.get<double>());
            return data;
        };
        const std::vector<double> E_ind = field("E_ind");
        const std::vector<double> F_ind = field("F_ind");
        const std::vector<double> G_ind = field("G_ind");
        const std::vector<double> K_surf = field("K_surface");

        for (int j2 = 1; j2 + 1 < nv; ++j2)
            for (int i = 1; i + 1 < nu; ++i) {
                const size_t idx = static_cast<size_t>(j2) * nu + i;
                if (!std::isfinite(E_ind[idx])) continue;
                const FirstFundamentalForm f = induced_fff(surf, i, j2);
                out.max_induced_diff = std::max({out.max_induced_diff,
                                                 std::abs(f.E - E_ind[idx]),
                                                 std::abs(f.F - F_ind[idx]),
                                                 std::abs(f.G - G_ind[idx])});
                if (std::isfinite(K_surf[idx])) {
                    const double k = surface_curvature(surf, i, j2);
                    out.max_curvature_diff =
                        std::max(out.max_curvature_diff, std::abs(k - K_surf[idx]));
                }
                ++out.nodes_checked;
            }
        out.ok = out.nodes_checked > 0 && out.max_induced_diff <= tol &&
                 out.max_curvature_diff <= tol;
        if (out.nodes_checked == 0) out.error = "no interior nodes to check";
        else if (!out.ok) out.error = "stored fields disagree with recomputation";
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Batch sweeps.

struct SweepEntry {
    std::string formula;
    std::optional<double> delta;  // empty = auto
};

struct SweepRow {
    std::string formula;
    double delta = 0.0;
    bool completed = false;
    double on_curve_max = 0.0;
    double off_curve_max = 0.0;
    double K_min = 0.0, K_max = 0.0;
    std::string error;
};

inline std::vector<SweepRow> sweep(const PipelineConfig& base,
                                   const std::vector<SweepEntry>& family) {
    std::vector<SweepRow> rows;
    rows.reserve(family.size());
    for (const SweepEntry& e : family) {
        SweepRow row;
        row.formula = e.formula;
        try {
            PipelineConfig cfg = base;
            cfg.ghat_formula = e.formula;
            cfg.delta = e.delta;
            cfg.out_dir.clear();
            PipelineResult res = run_pipeline(cfg);
            row.delta = res.delta;
            row.K_min = res.K_domain_min;
            row.K_max = res.K_domain_max;
            row.completed = !res.reality_at_start && res.report.has_value();
            if (res.report) {
                row.on_curve_max = std::max(res.report->on_curve_E_minus_R.max,
                                            res.report->on_curve_G_minus_S.max);
                row.off_curve_max = std::max(res.report->off_curve_E_minus_R.max,
                                             res.report->off_curve_G_minus_S.max);
            }
            if (res.reality_at_start) row.error = "reality violation at s = 0";
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "formula,delta,completed,on_curve_max,off_curve_max,K_min,K_max,error\n";
    for (const SweepRow& r : rows) {
        std::string formula = r.formula;
        for (char& c : formula)
            if (c == ',') c = ';';
        std::string err = r.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ';';
        out << formula << ',' << format_double(r.delta) << ',' << (r.completed ? 1 : 0) << ','
            << format_double(r.on_curve_max) << ',' << format_double(r.off_curve_max) << ','
            << format_double(r.K_min) << ',' << format_double(r.K_max) << ',' << err << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Regression against the constant-metric worked example: Ghat = 1,
// u = uhat + vhat, v = eps (uhat - vhat), J = -2 eps, a(s) = s,
// b(s) = (eps^-2 - 2)^-1/2 s, E = 1/2, G = 1 + (eps^-2 - 2)/2, and the
// induced form (1/2, 0, eps^-2 / 2).

struct ConstantMetricReport {
    double epsilon = 0.0;
    double margin_at_origin = 0.0;
    bool reality_failure = false;  // halted before integration (expected for large eps)
    bool passed = false;
    std::string failure;
    double max_J_err = 0.0;
    double max_a_err = 0.0;
    double max_b_err = 0.0;
    double max_E_err = 0.0;
    double max_G_err = 0.0;
    double max_induced_err = 0.0;
    PipelineResult result;
};

inline ConstantMetricReport constant_metric_regression(double eps, int grid = 41,
                                          const std::string& out_dir = {}) {
    if (!(eps > 0.0)) throw std::invalid_argument("constant_metric_regression: eps must be positive");
    ConstantMetricReport rep;
    rep.epsilon = eps;

    PipelineConfig cfg;
    cfg.ghat_formula = "1";
    cfg.domain = {-2.0, 2.0, -2.0, 2.0};
    cfg.delta = eps;
    cfg.s_max = 1.0;
    cfg.grid_nu = grid;
    cfg.grid_nv = grid;
    cfg.out_dir = out_dir;
    rep.result = run_pipeline(cfg);
    rep.margin_at_origin = rep.result.margin_at_origin;

    if (rep.result.reality_at_start) {
        rep.reality_failure = true;
        // Expected exactly when the closed-form margin eps^-2/2 - 1 is <= 0.
        rep.passed = !(1.0 / (2.0 * eps * eps) - 1.0 > 0.0);
        if (!rep.passed) rep.failure = "unexpected reality halt at s = 0";
        return rep;
    }

    auto check = [&rep](const char* what, double err, double tol) {
        if (err > tol && rep.failure.empty())
            rep.failure = std::string(what) + " error " + format_double(err) + " above " +
                          format_double(tol);
    };

    const ParamMap2& fwd = rep.result.components->components.forward();
    for (int j = 0; j < 9; ++j)
        for (int i = 0; i < 9; ++i) {
            const Vec2 p{rep.result.working.x0 + rep.result.working.width() * i / 8.0,
                         rep.result.working.y0 + rep.result.working.height() * j / 8.0};
            rep.max_J_err = std::max(rep.max_J_err, std::abs(fwd.jacobian_det(p) + 2.0 * eps));
        }
    check("jacobian", rep.max_J_err, 1e-12);

    // Truncation by domain exit is honest behavior for large eps (the
    // preimage curve leaves the data strip); the closed forms are checked
    // on whatever range was reached.
    const double beta = 1.0 / std::sqrt(1.0 / (eps * eps) - 2.0);
    const ODETrajectory& traj = *rep.result.trajectory;
    for (int k = 0; k <= 64; ++k) {
        const double s = traj.s_end() * k / 64.0;
        rep.max_a_err = std::max(rep.max_a_err, std::abs(traj.a(s) - s));
        rep.max_b_err = std::max(rep.max_b_err, std::abs(traj.b(s) - beta * s));
    }
    check("a(s)", rep.max_a_err, 1e-10);
    check("b(s)", rep.max_b_err, 1e-10);

    const double G_expected = 1.0 + 0.5 * (1.0 / (eps * eps) - 2.0);
    if (rep.result.eg) {
        const Rect& box = rep.result.surface->uv_box();
        for (int j = 0; j < 9; ++j)
            for (int i = 0; i < 9; ++i) {
                const Vec2 q{box.x0 + box.width() * i / 8.0, box.y0 + box.height() * j / 8.0};
                rep.max_E_err = std::max(rep.max_E_err, std::abs(rep.result.eg->E()(q) - 0.5));
                rep.max_G_err =
                    std::max(rep.max_G_err, std::abs(rep.result.eg->G()(q) - G_expected));
            }
    }
    check("E", rep.max_E_err, 1e-9);
    check("G", rep.max_G_err, 1e-9);

    if (rep.result.surface) {
        const EmbeddedSurface& surf = *rep.result.surface;
        for (int j = 1; j + 1 < surf.nv(); ++j)
            for (int i = 1; i + 1 < surf.nu(); ++i) {
                const FirstFundamentalForm f = induced_fff(surf, i, j);
                rep.max_induced_err = std::max(
                    {rep.max_induced_err, std::abs(f.E - 0.5), std::abs(f.F),
                     std::abs(f.G - 0.5 / (eps * eps))});
            }
    }
    check("induced form", rep.max_induced_err, 5e-6);

    rep.passed = rep.failure.empty();
    return rep;
}

} // namespace isoembed
