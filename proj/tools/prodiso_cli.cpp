#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prodiso/halfspace.hpp"
#include "prodiso/isoprofile.hpp"
#include "prodiso/perturb.hpp"
#include "prodiso/spectral.hpp"

using nlohmann::json;
using namespace prodiso;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 64;

struct RunConfig {
    std::string measure = "logistic";
    double tail_mass = 1e-12;
    std::optional<int> n;
    double tol = 1e-10;
    int max_iter = 400;
    double solver_margin = 0.01;
    std::string out;
    std::string format = "json";
};

struct Args {
    std::string halfspace = "coordinate 0";
    int dim = 2;
    int grid_t = 101;
    double t = 0.5;
    int n_max = 64;
    std::vector<double> trace_t;
    std::string bump;
    std::string basis;
    int budget = 500;
    double target = DesignOptions{}.target;
    double delta = DesignOptions{}.delta;
    std::string eps = "-0.02,-0.01,0.01,0.02";
    std::string tau_measure;
    bool boundary_gap = false;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Inline JSON, a path to a JSON file, or (for measures) a name.
json json_arg(const std::string& text) {
    auto first = text.find_first_not_of(" \t\n");
    if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) return json::parse(text);
    return json::parse(slurp(text));
}

MeasureSpec measure_arg(const std::string& text) {
    std::ifstream probe(text);
    if (probe.good() && text.find(':') == std::string::npos) return MeasureSpec::from_json(json::parse(slurp(text)));
    return MeasureSpec::parse(text);
}

std::vector<double> list_arg(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

void apply_config(const std::string& path, RunConfig& cfg) {
    json j = json::parse(slurp(path));
    if (j.contains("measure")) cfg.measure = j["measure"].is_string() ? j["measure"].get<std::string>() : j["measure"].dump();
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("tail_mass")) cfg.tail_mass = g["tail_mass"];
        if (g.contains("n")) cfg.n = g["n"].get<int>();
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        if (s.contains("tol")) cfg.tol = s["tol"];
        if (s.contains("max_iter")) cfg.max_iter = s["max_iter"];
        if (s.contains("solver_margin")) cfg.solver_margin = s["solver_margin"];
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        if (o.contains("path")) cfg.out = o["path"];
        if (o.contains("format")) cfg.format = o["format"];
    }
}

void emit(const RunConfig& cfg, const json& j, const std::string& csv) {
    if (cfg.out.empty()) return;
    std::string body = cfg.format == "csv" ? csv : j.dump(2) + "\n";
    if (cfg.out == "-") {
        std::cout << body;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write '" + cfg.out + "'");
    f << body;
}

std::string kv_csv(const std::vector<std::pair<std::string, double>>& rows) {
    std::string s = "name,value\n";
    for (const auto& [k, v] : rows) s += k + "," + fmt(v) + "\n";
    return s;
}

struct ParsedHalfSpace {
    enum { Coordinate, Bisector, Vector } kind = Coordinate;
    double t = 0.0;
    int sign = 1;
    std::vector<double> v;
};

ParsedHalfSpace halfspace_arg(const std::string& text) {
    ParsedHalfSpace h;
    std::istringstream in(text);
    std::string word;
    in >> word;
    if (word == "coordinate") {
        if (!(in >> h.t)) h.t = 0.0;
        return h;
    }
    if (word.rfind("bisector", 0) == 0) {
        h.kind = ParsedHalfSpace::Bisector;
        std::string rest = word.substr(8), tok;
        while (in >> tok) rest += " " + tok;
        std::istringstream r(rest);
        std::string s;
        if (r >> s) {
            if (s == "+" || s == "plus") {
                h.sign = 1;
            } else if (s == "-" || s == "minus") {
                h.sign = -1;
            } else {
                h.t = std::stod(s);
            }
            double t;
            if (r >> t) h.t = t;
        }
        return h;
    }
    auto semi = text.find(';');
    h.kind = ParsedHalfSpace::Vector;
    h.v = list_arg(text.substr(0, semi));
    h.t = semi == std::string::npos ? 0.0 : std::stod(text.substr(semi + 1));
    if (h.v.empty()) throw Error(ErrorKind::InvalidArgument, "cannot parse half-space '" + text + "'");
    return h;
}

HalfSpace to_halfspace(const ParsedHalfSpace& p, int dim) {
    switch (p.kind) {
        case ParsedHalfSpace::Coordinate: return HalfSpace::coordinate(dim, 0, p.t);
        case ParsedHalfSpace::Bisector: return HalfSpace::bisector(dim, p.sign, p.t);
        default: {
            auto v = p.v;
            if (static_cast<int>(v.size()) > dim) throw Error(ErrorKind::DimensionMismatch, "vector longer than --dim");
            v.resize(dim, 0.0);
            return HalfSpace::make(v, p.t);
        }
    }
}

BumpFunction bump_arg(const Args& a) {
    if (!a.bump.empty()) return BumpFunction::from_json(json_arg(a.bump));
    DesignOptions o;
    o.target = a.target;
    o.delta = a.delta;
    return design_bump(default_design_basis(), a.budget, o).bump;
}

std::vector<Atom> basis_arg(const Args& a) {
    if (a.basis.empty()) return default_design_basis();
    json j = json_arg(a.basis);
    if (j.contains("atoms")) j = j["atoms"];
    std::vector<Atom> out;
    for (const auto& e : j) out.push_back({e.at("center"), e.at("width"), e.value("mirrored", true)});
    return out;
}

int cmd_spectral_gap(const RunConfig& cfg, const Args&) {
    MeasureSpec m = measure_arg(cfg.measure);
    SpectralOptions so;
    so.tail_mass = cfg.tail_mass;
    so.n = cfg.n.value_or(4001);
    GapReport r = spectral_gap_report(m, so);
    std::printf("spectral gap %s: lambda = %.10f (b = %g, n = %d%s)\n", m.name().c_str(), r.lambda, r.b, r.n,
                r.b_extrapolated ? ", b-extrapolated" : "");
    json j = r.to_json();
    j["measure"] = m.to_json();
    emit(cfg, j,
         "lambda,lambda_raw,b,n,b_extrapolated\n" + fmt(r.lambda) + "," + fmt(r.lambda_raw) + "," + fmt(r.b) + "," +
             std::to_string(r.n) + "," + (r.b_extrapolated ? "1" : "0") + "\n");
    return kExitOk;
}

int cmd_stationary(const RunConfig& cfg, const Args& a) {
    MeasureSpec m = measure_arg(cfg.measure);
    HalfSpace hs = to_halfspace(halfspace_arg(a.halfspace), a.dim);
    std::vector<MeasureSpec> ms(a.dim, m);
    StationarityVerdict v = classify_stationary(ms, hs);
    std::printf("stationary %s dim %d: %s (residual %.3g)\n", m.name().c_str(), a.dim, tag_name(v.tag), v.residual);
    std::vector<std::pair<std::string, double>> rows{{"residual", v.residual}};
    for (const auto& d : v.details) rows.push_back(d);
    emit(cfg, v.to_json(), "tag," + std::string(tag_name(v.tag)) + "\n" + kv_csv(rows));
    return kExitOk;
}

int cmd_stable(const RunConfig& cfg, const Args& a) {
    MeasureSpec m = measure_arg(cfg.measure);
    StabilityOptions so;
    so.solver_margin = cfg.solver_margin;
    so.tail_mass = cfg.tail_mass;
    if (cfg.n) so.n = *cfg.n;
    so.boundary_gap = a.boundary_gap;
    ParsedHalfSpace p = halfspace_arg(a.halfspace);
    StabilityVerdict v;
    if (p.kind == ParsedHalfSpace::Coordinate) {
        v = coordinate_stability(m, p.t, so);
    } else if (p.kind == ParsedHalfSpace::Bisector) {
        v = noncoordinate_stability(m, p.sign, p.t, a.dim, so);
    } else {
        HalfSpace hs = to_halfspace(p, a.dim);
        auto sup = hs.support();
        if (sup.size() == 1) {
            double s = hs.v[sup[0]] > 0.0 ? 1.0 : -1.0;
            v = coordinate_stability(m, s * hs.t, so);
        } else if (sup.size() == 2 && std::abs(std::abs(hs.v[sup[0]]) - std::abs(hs.v[sup[1]])) < 1e-12) {
            double s0 = hs.v[sup[0]] > 0.0 ? 1.0 : -1.0, s1 = hs.v[sup[1]] > 0.0 ? 1.0 : -1.0;
            v = noncoordinate_stability(m, s0 * s1, s0 * hs.t, a.dim, so);
        } else {
            std::vector<MeasureSpec> ms(a.dim, m);
            StationarityVerdict sv = classify_stationary(ms, hs);
            if (sv.tag == StationarityTag::NotStationary)
                throw Error(ErrorKind::HypothesisViolated, "half-space is not stationary for this measure");
            throw Error(ErrorKind::HypothesisViolated, "stability is implemented for coordinate and bisector half-spaces");
        }
    }
    std::printf("stable %s dim %d: %s", m.name().c_str(), a.dim, tag_name(v.tag));
    for (const auto& [k, val] : v.certificates) std::printf(" %s=%.6g", k.c_str(), val);
    std::printf("%s\n", v.at_threshold ? " (at threshold)" : "");
    emit(cfg, v.to_json(), "tag," + std::string(tag_name(v.tag)) + "\n" + kv_csv(v.certificates));
    return v.tag == StabilityTag::Inconclusive ? kExitInconclusive : kExitOk;
}

int cmd_profile(const RunConfig& cfg, const Args& a) {
    MeasureSpec m = measure_arg(cfg.measure);
    auto ts = unit_grid(a.grid_t);
    json j;
    j["t"] = ts;
    std::string csv = "t,profile\n";
    std::vector<double> vals;
    for (double t : ts) {
        double v = profile_1d(m, t);
        vals.push_back(v);
        csv += fmt(t) + "," + fmt(v) + "\n";
    }
    j["profile"] = vals;
    j["measure"] = m.to_json();
    std::printf("profile %s: %d points, I(1/2) = %.10f\n", m.name().c_str(), a.grid_t, profile_1d(m, 0.5));
    emit(cfg, j, csv);
    return kExitOk;
}

int cmd_envelope(const RunConfig& cfg, const Args& a) {
    MeasureSpec m = measure_arg(cfg.measure);
    EnvelopeOptions eo;
    eo.trace_ts = a.trace_t;
    eo.n_max = a.n_max;
    ProfileBounds pb = profile_envelope(m, unit_grid(a.grid_t), eo);
    std::printf("envelope %s: %d points, lambda = %.10f, sigma = %.10f\n", m.name().c_str(), a.grid_t, pb.lambda,
                pb.sigma);
    emit(cfg, pb.to_json(), pb.to_csv());
    return kExitOk;
}

int cmd_clt(const RunConfig& cfg, const Args& a) {
    MeasureSpec m = measure_arg(cfg.measure);
    CltTrace tr = clt_upper_bound(m, a.t, a.n_max);
    std::printf("clt %s t = %g: f_Z(y) at N = %d is %.10f, limit %.10f, bound %.10f\n", m.name().c_str(), a.t, a.n_max,
                tr.values.back(), tr.limit, tr.bound);
    std::string csv = "N,value,y\n";
    for (std::size_t i = 0; i < tr.ns.size(); ++i)
        csv += std::to_string(tr.ns[i]) + "," + fmt(tr.values[i]) + "," + fmt(tr.ys[i]) + "\n";
    emit(cfg, tr.to_json(), csv);
    return kExitOk;
}

int cmd_perturb_slopes(const RunConfig& cfg, const Args& a) {
    BumpFunction b = bump_arg(a);
    Slopes s = perturbation_slopes(b);
    std::printf("slopes: lambda_dot = %.10g, k_dot = %.10g, a_dot = %.10g\n", s.lambda_dot, s.k_dot, s.a_dot);
    json j = s.to_json();
    j["bump"] = b.to_json();
    emit(cfg, j, kv_csv({{"lambda_dot", s.lambda_dot}, {"k_dot", s.k_dot}, {"a_dot", s.a_dot}}));
    return kExitOk;
}

int cmd_perturb_design(const RunConfig& cfg, const Args& a) {
    DesignOptions o;
    o.target = a.target;
    o.delta = a.delta;
    DesignResult d = design_bump(basis_arg(a), a.budget, o);
    const Slopes& s = d.report.slopes;
    std::printf("design: feasible = %s, k_dot = %.6g, lambda_dot - a_dot = %.6g, sup|bump''| = %.6g\n",
                d.report.feasible ? "true" : "false", s.k_dot, s.lambda_dot - s.a_dot, d.max_abs_d2);
    json j{{"bump", d.bump.to_json()}, {"slopes", s.to_json()}, {"feasible", d.report.feasible},
           {"max_abs_d2", d.max_abs_d2}};
    std::string csv = "center,width,mirrored,coeff\n";
    for (const auto& atom : j["bump"]["atoms"])
        csv += fmt(atom["center"]) + "," + fmt(atom["width"]) + "," + (atom["mirrored"].get<bool>() ? "1" : "0") + "," +
               fmt(atom["coeff"]) + "\n";
    emit(cfg, j, csv);
    return kExitOk;
}

int cmd_perturb_validate(const RunConfig& cfg, const Args& a) {
    BumpFunction b = bump_arg(a);
    PerturbOptions po;
    PerturbationReport r = finite_diff_validate(b, list_arg(a.eps), po);
    std::printf("validate: max relative slope error %.3g, feasible = %s, baseline (%.6f, %.6f, %.6f)\n",
                r.max_rel_error, r.feasible ? "true" : "false", r.baseline.lambda, r.baseline.k, r.baseline.a);
    std::string csv = "eps,lambda,k,a\n";
    csv += "0," + fmt(r.baseline.lambda) + "," + fmt(r.baseline.k) + "," + fmt(r.baseline.a) + "\n";
    for (const auto& v : r.values)
        csv += fmt(v.eps) + "," + fmt(v.lambda) + "," + fmt(v.k) + "," + fmt(v.a) + "\n";
    json j = r.to_json();
    j["bump"] = b.to_json();
    emit(cfg, j, csv);
    return kExitOk;
}

int cmd_tensor_oracle(const RunConfig& cfg, const Args& a) {
    MeasureSpec nu_m = measure_arg(cfg.measure);
    MeasureSpec tau_m = a.tau_measure.empty() ? nu_m : measure_arg(a.tau_measure);
    double b = std::max(truncation_interval(nu_m, cfg.tail_mass).hi, truncation_interval(tau_m, cfg.tail_mass).hi);
    Grid g = Grid::symmetric(b, cfg.n.value_or(101));
    auto xs = g.nodes();
    std::vector<double> nu(g.n), tau(g.n), theta(g.n);
    for (int i = 0; i < g.n; ++i) {
        nu[i] = density(nu_m, xs[i]);
        tau[i] = density(tau_m, xs[i]);
        theta[i] = -eval_log_density(nu_m, xs[i], 2).ddpsi;
    }
    OracleOptions oo;
    oo.max_iter = cfg.max_iter;
    TensorOracleResult r = tensor_oracle_2d(nu, tau, theta, g, oo);
    std::printf("tensor oracle: lambda_2d = %.6g, P1 = %.6g, P2 = %.6g, agrees = %s\n", r.lambda_2d, r.p1_lambda,
                r.p2_value, r.agrees ? "true" : "false");
    json j{{"lambda_2d", r.lambda_2d}, {"p1_lambda", r.p1_lambda}, {"p2_value", r.p2_value},
           {"lambda_tau", r.lambda_tau}, {"holds_2d", r.holds_2d}, {"holds_split", r.holds_split},
           {"agrees", r.agrees}, {"witness", r.witness}};
    emit(cfg, j,
         kv_csv({{"lambda_2d", r.lambda_2d}, {"p1_lambda", r.p1_lambda}, {"p2_value", r.p2_value},
                 {"lambda_tau", r.lambda_tau}, {"agrees", r.agrees ? 1.0 : 0.0}}));
    return r.agrees ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Isoperimetry and half-space stability for product measures"};
    app.require_subcommand(1);
    RunConfig cfg;
    Args a;
    std::string config_path;
    int grid_n = 0;

    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--measure", cfg.measure, "measure name (logistic, gaussian:s, exponential, power:p) or JSON");
    app.add_option("--grid-n", grid_n, "grid nodes");
    app.add_option("--tail-mass", cfg.tail_mass, "truncation tail mass");
    app.add_option("--tol", cfg.tol, "solver tolerance");
    app.add_option("--max-iter", cfg.max_iter, "iteration cap");
    app.add_option("--solver-margin", cfg.solver_margin, "band around 1 reported as inconclusive");
    app.add_option("--out", cfg.out, "output file ('-' for stdout)");
    app.add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const RunConfig&, const Args&);
    };
    const Command commands[] = {
        {"spectral-gap", "Poincare constant of the measure", cmd_spectral_gap},
        {"stationary", "classify a half-space as stationary", cmd_stationary},
        {"stable", "stability verdict for a half-space", cmd_stable},
        {"profile", "one-dimensional isoperimetric profile", cmd_profile},
        {"envelope", "lower and upper envelopes of the infinite-dimensional profile", cmd_envelope},
        {"clt", "density of normalized sums at the t-quantile", cmd_clt},
        {"perturb-slopes", "first-order slopes for a bump", cmd_perturb_slopes},
        {"perturb-design", "search a bump with k_dot > 0 and lambda_dot > a_dot", cmd_perturb_design},
        {"perturb-validate", "finite-difference check of the slopes", cmd_perturb_validate},
        {"tensor-oracle", "dense two-dimensional check of the split conditions", cmd_tensor_oracle},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        CLI::App* s = app.add_subcommand(c.name, c.help);
        s->fallthrough();
        subs.push_back({s, &c});
    }
    auto sub = [&](const char* name) { return app.get_subcommand(name); };
    for (const char* n : {"stationary", "stable"}) {
        sub(n)->add_option("--halfspace", a.halfspace, "'coordinate t', 'bisector +|-', or 'v1,v2,...;t'");
        sub(n)->add_option("--dim", a.dim, "dimension")->check(CLI::PositiveNumber);
    }
    sub("stable")->add_flag("--boundary-gap", a.boundary_gap, "use the gap of the boundary density in (P2)");
    for (const char* n : {"profile", "envelope"}) sub(n)->add_option("--grid-t", a.grid_t, "number of t points");
    sub("envelope")->add_option("--trace-t", a.trace_t, "t values with a CLT trace")->delimiter(',');
    for (const char* n : {"envelope", "clt"}) sub(n)->add_option("--n-max", a.n_max, "largest N");
    sub("clt")->add_option("--t", a.t, "measure of the half-space");
    for (const char* n : {"perturb-slopes", "perturb-validate"})
        sub(n)->add_option("--bump", a.bump, "bump JSON or file (default: designed bump)");
    for (const char* n : {"perturb-slopes", "perturb-design", "perturb-validate"}) {
        sub(n)->add_option("--budget", a.budget, "largest basis size");
        sub(n)->add_option("--target", a.target, "value of both design functionals");
        sub(n)->add_option("--delta", a.delta, "required slack");
    }
    sub("perturb-design")->add_option("--basis", a.basis, "atom list JSON or file");
    sub("perturb-validate")->add_option("--eps", a.eps, "comma-separated epsilons");
    sub("tensor-oracle")->add_option("--tau-measure", a.tau_measure, "second factor (default: --measure)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (!config_path.empty()) {
            RunConfig file_cfg;
            apply_config(config_path, file_cfg);
            // Flags given on the command line win over the file.
            if (app.count("--measure") == 0) cfg.measure = file_cfg.measure;
            if (app.count("--tail-mass") == 0) cfg.tail_mass = file_cfg.tail_mass;
            if (app.count("--tol") == 0) cfg.tol = file_cfg.tol;
            if (app.count("--max-iter") == 0) cfg.max_iter = file_cfg.max_iter;
            if (app.count("--solver-margin") == 0) cfg.solver_margin = file_cfg.solver_margin;
            if (app.count("--out") == 0) cfg.out = file_cfg.out;
            if (app.count("--format") == 0) cfg.format = file_cfg.format;
            cfg.n = file_cfg.n;
        }
        if (app.count("--grid-n") > 0) cfg.n = grid_n;
        for (const auto& [s, c] : subs)
            if (s->parsed()) return c->run(cfg, a);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "error: InvalidArgument: %s\n", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitUsage;
}
