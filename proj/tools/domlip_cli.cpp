// Command-line surface: representation inspection, domination verdicts,
// the forward/inverse Psi maps, Thurston distance brackets, harmonic
// solves with logs, and the built-in verification suites.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "domlip/psi.hpp"

using json = nlohmann::ordered_json;
using namespace domlip;

namespace {

std::filesystem::path output_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("DOMLIP_OUT")) return env;
    return ".";
}

FNCoords parse_fn(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--fn: not a number: " + tok);
        }
    if (v.size() % 6 != 0 || v.empty())
        throw CLI::ValidationError("--fn expects 6g-6 comma-separated numbers: lengths then twists");
    const std::size_t n = v.size() / 2;
    return FNCoords(std::vector<double>(v.begin(), v.begin() + n),
                    std::vector<double>(v.begin() + n, v.end()));
}

json fn_to_json(const FNCoords& c) {
    return json{{"lengths", c.lengths}, {"twists", c.twists}};
}

void emit(const json& j, const std::string& out_flag, const std::string& name) {
    std::cout << j.dump(2) << "\n";
    const auto dir = output_dir(out_flag);
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / name);
    os << j.dump(2) << "\n";
}

const char* type_name(IsometryType t) {
    switch (t) {
        case IsometryType::Identity: return "Identity";
        case IsometryType::Elliptic: return "Elliptic";
        case IsometryType::Parabolic: return "Parabolic";
        default: return "Hyperbolic";
    }
}

int cmd_rep_info(const std::string& path, const std::string& out) {
    const SurfaceRep rep = load_rep(path);
    json report;
    report["file"] = path;
    report["genus"] = rep.group.genus;
    report["relator_residual"] = relator_residual(rep);
    report["euler_class"] = euler_class(rep);
    json gens = json::array();
    for (std::size_t i = 0; i < rep.images.size(); ++i)
        gens.push_back({{"generator", to_string(Word({static_cast<int>(i) + 1}))},
                        {"type", type_name(classify(rep.images[i]))},
                        {"translation_length", translation_length(rep.images[i])}});
    report["generators"] = gens;
    const auto pd = detect_parabolic(rep);
    if (pd) {
        report["reducible"] = true;
        report["fixed_point_on_boundary"] = pd->boundary;
        if (pd->boundary) report["morphism"] = pd->m;
    } else {
        report["reducible"] = false;
    }
    emit(report, out, "rep_info.json");
    return 0;
}

int cmd_dominate(const std::string& jpath, const std::string& rpath, int radius, double edge,
                 double alpha, const std::string& out) {
    const SurfaceRep j = load_rep(jpath);
    const SurfaceRep rho = load_rep(rpath);
    const Mesh mesh = build_mesh(j, edge);
    DominationVerdict v = check_domination(j, rho, mesh, radius, TargetSpace::plane(alpha));
    json report;
    report["verdict"] = to_string(v.kind);
    report["lower"] = v.lower;
    report["upper"] = v.upper;
    report["radius"] = radius;
    report["edge"] = edge;
    report["alpha"] = alpha;
    if (v.kind == DominationVerdict::Kind::StrictlyDominated) report["margin"] = v.margin;
    if (v.kind == DominationVerdict::Kind::NotDominated)
        report["witness"] = to_string(v.witness_word);
    emit(report, out, "dominate.json");
    switch (v.kind) {
        case DominationVerdict::Kind::StrictlyDominated: return 0;
        case DominationVerdict::Kind::NotDominated: return 1;
        default: return 2;
    }
}

int cmd_thurston(const std::string& jpath, const std::string& j2path, int radius, double edge,
                 const std::string& out) {
    const SurfaceRep j = load_rep(jpath);
    const SurfaceRep j2 = load_rep(j2path);
    const Mesh mesh = build_mesh(j, edge);
    const Mesh mesh2 = build_mesh(j2, edge);
    const auto [lo, up] = thurston_distance(j, j2, mesh, radius);
    const auto [lo2, up2] = thurston_distance(j2, j, mesh2, radius);
    json report;
    report["forward"] = {{"lower", lo}, {"upper", up}};
    report["reverse"] = {{"lower", lo2}, {"upper", up2}};
    report["radius"] = radius;
    report["edge"] = edge;
    emit(report, out, "thurston.json");
    return 0;
}

int cmd_harmonic(const std::string& jpath, const std::string& rpath, double edge,
                 const std::string& out) {
    const SurfaceRep j = load_rep(jpath);
    const SurfaceRep rho = load_rep(rpath);
    const Mesh mesh = build_mesh(j, edge);

    const auto dir = output_dir(out);
    std::filesystem::create_directories(dir);
    save_mesh((dir / "domain.mesh").string(), mesh);

    SolveOptions opts;
    opts.keep_log = true;
    const auto pd = detect_parabolic(rho);
    json report;
    if (pd && pd->boundary) {
        auto [map, rep] = solve_harmonic_line(mesh, pd->m);
        report["kind"] = "line";
        report["energy"] = rep.total;
        std::ofstream mf(dir / "map.txt");
        mf.precision(17);
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
            mf << map.line_value(mesh, static_cast<int>(v)) << "\n";
    } else {
        EquivariantMap init = pd ? constant_init(mesh, rho, TargetSpace::plane(), pd->interior_point)
                                 : identity_init(mesh, rho, TargetSpace::plane());
        auto [map, rep] = solve_harmonic(mesh, rho, TargetSpace::plane(), init, opts);
        report["kind"] = "plane";
        report["energy"] = rep.total;
        report["gradient_norm"] = rep.gradient_norm;
        report["iterations"] = rep.iterations;
        report["converged"] = rep.converged;
        const QuadDiff phi = hopf_differential(map, mesh);
        report["holomorphicity_residual"] = holomorphicity_residual(phi, mesh);
        std::ofstream log(dir / "iterations.csv");
        log << "iter,energy,gradient_norm,step\n";
        log.precision(17);
        for (const auto& row : rep.log)
            log << row.iter << "," << row.energy << "," << row.grad_norm << "," << row.step << "\n";
        std::ofstream mf(dir / "map.txt");
        mf.precision(17);
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
            const Point p = map.value(mesh, static_cast<int>(v));
            mf << p.x << " " << p.y << "\n";
        }
    }
    emit(report, out, "harmonic.json");
    return 0;
}

int cmd_psi(bool forward, const std::string& fn, const std::string& rpath, double edge,
            const std::string& out) {
    const FNCoords X = parse_fn(fn);
    const SurfaceRep rho = load_rep(rpath);
    json report;
    PsiResult res;
    if (forward) {
        PsiForwardOptions opts;
        opts.mesh.target_edge = edge;
        res = psi_forward(X, rho, opts);
        report["direction"] = "forward";
        report["residual"] = res.F_min;
        report["residual_floor"] = res.residual_floor;
    } else {
        MinimizeOptions opts;
        opts.mesh.target_edge = edge;
        opts.keep_path = true;
        const SurfaceRep j0 = fn_to_holonomy(X);
        res = minimize_F(j0, rho, X, opts);
        report["direction"] = "inverse";
        report["F_min"] = res.F_min;
        report["grad_norm_at_exit"] = res.grad_norm_at_exit;
        report["properness_warning"] = res.properness_warning;
    }
    report["argmin"] = fn_to_json(res.argmin);
    report["iterations"] = res.iterations;
    emit(report, out, "psi.json");

    const auto dir = output_dir(out);
    std::ofstream csv(dir / "psi_path.csv");
    csv << "step,F,E_j0,E_rho\n";
    csv.precision(17);
    for (std::size_t i = 0; i < res.path.size(); ++i)
        csv << i << "," << res.path[i].F << "," << res.path[i].E_j0 << ","
            << res.path[i].E_rho << "\n";
    return 0;
}

int cmd_continuity(const std::string& fn, double step, int steps, double edge,
                   const std::string& out) {
    // FN path of the domain structure with a trivial target: the minimizer
    // must track the path point by point.
    const FNCoords X0 = parse_fn(fn);
    std::vector<std::pair<SurfaceRep, SurfaceRep>> path;
    for (int s = 0; s <= steps; ++s) {
        FNCoords X = X0;
        X.lengths[0] += step * s;
        path.emplace_back(fn_to_holonomy(X), SurfaceRep::trivial(X.genus()));
    }
    MinimizeOptions opts;
    opts.mesh.target_edge = edge;
    const auto table = minimizer_continuity_experiment(path, X0, opts);
    json report;
    json rows = json::array();
    double max_disp = 0.0;
    for (const auto& row : table) {
        rows.push_back({{"argmin", fn_to_json(row.argmin)}, {"displacement", row.displacement}});
        max_disp = std::max(max_disp, row.displacement);
    }
    report["steps"] = rows;
    report["max_displacement"] = max_disp;
    report["path_step"] = step;
    emit(report, out, "continuity.json");
    return 0;
}

// Built-in verification batteries; each row is pass/fail with a measure.
struct Suite {
    json rows = json::array();
    bool ok = true;
    void row(const std::string& name, bool pass, double measure) {
        rows.push_back({{"check", name}, {"pass", pass}, {"measure", measure}});
        ok = ok && pass;
    }
};

void suite_busemann(Suite& s, std::mt19937& rng) {
    std::uniform_real_distribution<double> ux(-3.0, 3.0), uy(0.1, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Point p(ux(rng), uy(rng));
        worst = std::max(worst, std::abs(busemann(BoundaryPoint::infinity(), Point(0, 1), p) +
                                         std::log(p.y)));
    }
    s.row("busemann at infinity equals -log y", worst < 1e-9, worst);
    double worst_len = 0.0;
    for (int k = 1; k <= 20; ++k) {
        const double l = 0.3 * k;
        worst_len = std::max(worst_len, std::abs(translation_length(Moebius::axial(l)) - l));
    }
    s.row("translation length of the axial family", worst_len < 1e-8, worst_len);
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const Point x(ux(rng), uy(rng)), y(ux(rng), uy(rng));
        const BoundaryPoint b = BoundaryPoint::finite(ux(rng));
        const double t = uy(rng);
        const double before = dist(x, y);
        const double after = dist(horoflow(b, t, x), horoflow(b, t, y));
        if (after > before + 1e-9) ++bad;
    }
    s.row("horoflow does not expand distances", bad == 0, bad);
}

void suite_angles(Suite& s, std::mt19937& rng) {
    std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(0.2, 4.0);
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const Point o(ux(rng), uy(rng)), a(ux(rng), uy(rng)), b(ux(rng), uy(rng)), c(ux(rng), uy(rng));
        try {
            const double ab = angle_at_vertex(a, o, b), bc = angle_at_vertex(b, o, c),
                         ac = angle_at_vertex(a, o, c);
            if (ac > ab + bc + 1e-9) ++bad;
        } catch (const Error&) {}
    }
    s.row("comparison angle triangle inequality", bad == 0, bad);
}

void suite_energy(Suite& s) {
    const SurfaceRep j = fn_to_holonomy(FNCoords({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5}));
    const Mesh mesh = build_mesh(j, 0.2);
    const double target = 4.0 * std::numbers::pi;
    const double err = std::abs(mesh.total_area() - target) / target;
    s.row("Gauss-Bonnet area within 1 percent", err < 1e-2, err);
    const EquivariantMap id = identity_init(mesh, j, TargetSpace::plane());
    const double Eerr = std::abs(total_energy(id, mesh).total - target) / target;
    s.row("identity energy within 1 percent", Eerr < 1e-2, Eerr);
}

void suite_hopf(Suite& s) {
    const SurfaceRep j = fn_to_holonomy(FNCoords({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5}));
    const Mesh mesh = build_mesh(j, 0.25);
    auto [map, rep] = solve_harmonic(mesh, j, TargetSpace::plane(),
                                     identity_init(mesh, j, TargetSpace::plane()));
    const QuadDiff phi = hopf_differential(map, mesh);
    double mx = 0.0;
    for (std::size_t f = 0; f < phi.phi.size(); ++f)
        mx = std::max(mx, std::abs(phi.phi[f]) / mesh.conformal[f]);
    s.row("identity solve Hopf max below 1e-5", mx < 1e-5, mx);
    double rec = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Mat2 h = rep.pullback[f];
        const double e = (h[0][0] + h[1][1]) / (2.0 * mesh.conformal[f]);
        const Complex p = phi.phi[f];
        rec = std::max({rec,
                        std::abs(h[0][0] - (e * mesh.conformal[f] + 2.0 * p.real())),
                        std::abs(h[1][1] - (e * mesh.conformal[f] - 2.0 * p.real())),
                        std::abs(h[0][1] - (-2.0 * p.imag() / 2.0))});
    }
    s.row("pullback reconstruction from energy and Hopf", rec < 1e-10, rec);
}

void suite_properness(Suite& s, std::mt19937& rng) {
    const FNCoords c0({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5});
    const SurfaceRep j0 = fn_to_holonomy(c0);
    std::uniform_real_distribution<double> un(-0.3, 0.3);
    std::vector<FNCoords> sample;
    for (int k = 0; k < 3; ++k) {
        FNCoords X = c0;
        for (std::size_t i = 0; i < X.dim(); ++i) X.coord(i) += un(rng);
        sample.push_back(X);
    }
    MeshParams mp;
    mp.target_edge = 0.4;
    const auto rep = verify_properness_bound(j0, SurfaceRep::trivial(2), sample, 0.0, mp);
    s.row("properness bound with trivial target", rep.ok, rep.ok ? 0.0 : 1.0);
}

void suite_identity(Suite& s) {
    const FNCoords c1({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5});
    FNCoords c2 = c1;
    c2.lengths[0] += 0.2;
    c2.twists[1] += 0.15;
    MeshParams mp;
    mp.target_edge = 0.4;
    const auto rep = verify_energy_identity(c1, c2, fn_to_holonomy(c1), SurfaceRep::trivial(2), mp);
    s.row("energy comparison identity within 3 percent", rep.relative_mismatch < 3e-2,
          rep.relative_mismatch);
    s.row("F non-decreasing away from the critical point", rep.monotone, rep.F_X2 - rep.F_X1);
}

void suite_continuity(Suite& s) {
    const FNCoords c0({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5});
    const SurfaceRep j = fn_to_holonomy(c0);
    const Mesh mesh = build_mesh(j, 0.4);
    std::vector<SurfaceRep> path;
    for (int k = 0; k < 3; ++k) {
        SurfaceRep rho{SurfaceGroup(2)};
        for (int i = 0; i < 4; ++i) rho.images[i] = Moebius::rotation(0.2 * (k + 1) * (i + 1));
        path.push_back(rho);
    }
    const auto table = lip_continuity_probe(j, path, mesh, 4);
    double lower_max = 0.0;
    for (const auto& r : table.rows) lower_max = std::max(lower_max, r.lower);
    s.row("elliptic path keeps zero lower bound", lower_max == 0.0, lower_max);
    s.row("upper bound jumps stay bounded", table.max_upper_jump < 0.5, table.max_upper_jump);
}

int cmd_verify(const std::string& name, unsigned seed, const std::string& out) {
    Suite s;
    std::mt19937 rng(seed);
    if (name == "busemann") suite_busemann(s, rng);
    else if (name == "angles") suite_angles(s, rng);
    else if (name == "energy") suite_energy(s);
    else if (name == "hopf") suite_hopf(s);
    else if (name == "properness") suite_properness(s, rng);
    else if (name == "identity") suite_identity(s);
    else if (name == "continuity") suite_continuity(s);
    else throw CLI::ValidationError("unknown suite: " + name);
    json report;
    report["suite"] = name;
    report["seed"] = seed;
    report["checks"] = s.rows;
    report["pass"] = s.ok;
    emit(report, out, "verify_" + name + ".json");
    return s.ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometry of dominated surface-group representations"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out;
    int threads = 1;
    app.add_option("--out", out, "output directory (default: $DOMLIP_OUT or .)");
    app.add_option("--threads", threads, "worker cap (accepted for compatibility)");

    std::string rep_path, j_path, rho_path, j2_path, suite;
    std::string fn;
    int radius = 6, steps = 4;
    double edge = 0.25, alpha = 1.0, path_step = 0.05;
    unsigned seed = 1;
    bool forward = false, inverse = false;

    auto* info = app.add_subcommand("rep-info", "inspect a representation file");
    info->add_option("file", rep_path)->required()->check(CLI::ExistingFile);

    auto* dom = app.add_subcommand("dominate", "domination verdict for a pair");
    dom->add_option("j", j_path)->required()->check(CLI::ExistingFile);
    dom->add_option("rho", rho_path)->required()->check(CLI::ExistingFile);
    dom->add_option("--radius", radius);
    dom->add_option("--edge", edge);
    dom->add_option("--alpha", alpha);

    auto* thu = app.add_subcommand("thurston", "Thurston distance bracket, both orders");
    thu->add_option("j", j_path)->required()->check(CLI::ExistingFile);
    thu->add_option("j2", j2_path)->required()->check(CLI::ExistingFile);
    thu->add_option("--radius", radius);
    thu->add_option("--edge", edge);

    auto* har = app.add_subcommand("harmonic", "harmonic solve with iteration log");
    har->add_option("j", j_path)->required()->check(CLI::ExistingFile);
    har->add_option("rho", rho_path)->required()->check(CLI::ExistingFile);
    har->add_option("--edge", edge);

    auto* psi = app.add_subcommand("psi", "forward or inverse Psi map");
    psi->add_flag("--forward", forward);
    psi->add_flag("--inverse", inverse);
    psi->add_option("--fn", fn, "FN coordinates: 3g-3 lengths then 3g-3 twists")->required();
    psi->add_option("rho", rho_path)->required()->check(CLI::ExistingFile);
    psi->add_option("--edge", edge);

    auto* ver = app.add_subcommand("verify", "run a verification suite");
    ver->add_option("suite", suite)->required();
    ver->add_option("--seed", seed);

    auto* con = app.add_subcommand("continuity", "minimizer continuity along an FN path");
    con->add_option("--fn", fn)->required();
    con->add_option("--step", path_step);
    con->add_option("--steps", steps);
    con->add_option("--edge", edge);

    CLI11_PARSE(app, argc, argv);
    std::cout.precision(17);

    try {
        if (*info) return cmd_rep_info(rep_path, out);
        if (*dom) return cmd_dominate(j_path, rho_path, radius, edge, alpha, out);
        if (*thu) return cmd_thurston(j_path, j2_path, radius, edge, out);
        if (*har) return cmd_harmonic(j_path, rho_path, edge, out);
        if (*psi) {
            if (forward == inverse)
                throw CLI::ValidationError("psi requires exactly one of --forward/--inverse");
            return cmd_psi(forward, fn, rho_path, edge, out);
        }
        if (*ver) return cmd_verify(suite, seed, out);
        if (*con) return cmd_continuity(fn, path_step, steps, edge, out);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
