#include "mea/config.hpp"
#include "mea/postproc.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace mea::config {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"case",
         {"domain", "length", "width", "radius", "r_in", "r_out", "arch_height", "outer_a0", "outer_cos", "outer_sin",
          "inner_a0", "inner_cos", "inner_sin"}},
        {"airy", {"l1", "l2", "l3", "state", "c0", "c1", "c2"}},
        {"loads", {"density", "thickness", "alpha_h", "theta_h_deg", "h_reference"}},
        {"train",
         {"formulation", "hidden_layers", "width", "adam_lr", "adam_epochs", "lbfgs_steps", "lbfgs_history",
          "wolfe_c1", "wolfe_c2", "lbfgs_step", "line_search_trials", "n_pde", "n_bc", "n_bc_curv",
          "resample_every", "relobralo_alpha", "relobralo_rho", "relobralo_tau", "init_seed", "sample_seed",
          "validation_seed", "weight_seed", "n_val", "validate_every", "checkpoint_every"}},
        {"outputs", {"directory", "formats", "grid", "wallclock"}},
        {"reference", {"kind", "fd_nx", "fd_ny", "manufactured", "compare_points", "compare_seed"}},
    };
    return s;
}

bool is_point_load_key(const std::string& key) {
    const std::string prefix = "point_load_";
    if (key.rfind(prefix, 0) != 0 || key.size() == prefix.size()) return false;
    return key.find_first_not_of("0123456789", prefix.size()) == std::string::npos;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
        throw ConfigError("'" + key + "' expects a finite number, got '" + text + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
    return v;
}

std::size_t to_count(const std::string& key, const std::string& text) {
    const auto v = to_int(key, text);
    if (v < 0) throw ConfigError("'" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

std::uint64_t to_seed(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t[0] == '-' || end != t.c_str() + t.size())
        throw ConfigError("'" + key + "' expects an unsigned integer, got '" + text + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(to_double(key, item));
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string to_string(ReferenceKind k) {
    switch (k) {
        case ReferenceKind::none: return "none";
        case ReferenceKind::fd: return "fd";
        case ReferenceKind::manufactured: return "manufactured";
    }
    return "none";
}

ReferenceKind reference_kind_from_string(const std::string& s) {
    if (s == "none") return ReferenceKind::none;
    if (s == "fd") return ReferenceKind::fd;
    if (s == "manufactured") return ReferenceKind::manufactured;
    throw ConfigError("unknown reference kind '" + s + "' (expected none, fd or manufactured)");
}

}  // namespace

RunConfig parse(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    for (const auto& [section, body] : tree) {
        const auto it = schema().find(section);
        if (it == schema().end()) {
            if (body.empty()) throw ConfigError("key '" + section + "' outside of any section");
            throw ConfigError("unknown config section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            (void)value;
            if (it->second.count(key) == 0 && !(section == "loads" && is_point_load_key(key)))
                throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
        }
    }

    RunConfig c;
    auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
        const auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
        if (!v) return std::nullopt;
        return trim(*v);
    };

    // [case]
    auto& cs = c.case_;
    const std::string kind = get("case", "domain").value_or("rectangle");
    cs.domain.kind = geometry::domain_kind_from_string(kind);
    cs.domain.length = cs.domain.width = cs.domain.r_in = cs.domain.r_out = 0.0;
    auto num = [&](const std::string& section, const std::string& key, double fallback) {
        const auto v = get(section, key);
        return v ? to_double(key, *v) : fallback;
    };
    switch (cs.domain.kind) {
        case geometry::DomainKind::rectangle:
            cs.domain.length = num("case", "length", 13.0);
            cs.domain.width = num("case", "width", 8.0);
            cs.profile.arch_height = num("case", "arch_height", 2.0);
            break;
        case geometry::DomainKind::disk:
            cs.domain.r_out = num("case", "radius", 6.0);
            break;
        case geometry::DomainKind::annulus:
            cs.domain.r_in = num("case", "r_in", 0.6);
            cs.domain.r_out = num("case", "r_out", 6.0);
            break;
    }
    if (get("case", "radius") && cs.domain.kind == geometry::DomainKind::annulus)
        throw ConfigError("annulus uses r_in and r_out, not radius");
    cs.domain.validate();
    cs.profile.outer.a0 = num("case", "outer_a0", 0.0);
    cs.profile.outer.cos_coeffs = to_list("outer_cos", get("case", "outer_cos").value_or(""));
    cs.profile.outer.sin_coeffs = to_list("outer_sin", get("case", "outer_sin").value_or(""));
    cs.profile.inner.a0 = num("case", "inner_a0", 0.0);
    cs.profile.inner.cos_coeffs = to_list("inner_cos", get("case", "inner_cos").value_or(""));
    cs.profile.inner.sin_coeffs = to_list("inner_sin", get("case", "inner_sin").value_or(""));
    cs.profile.outer.validate();
    cs.profile.inner.validate();

    // [airy]
    cs.airy.l1 = num("airy", "l1", 0.0);
    cs.airy.l2 = num("airy", "l2", 0.0);
    cs.airy.l3 = num("airy", "l3", 0.0);
    cs.airy.state = stress_state_from_string(get("airy", "state").value_or("compression"));
    cs.airy.c0 = num("airy", "c0", 0.0);
    cs.airy.c1 = num("airy", "c1", 0.0);
    cs.airy.c2 = num("airy", "c2", 0.0);
    cs.airy.centroid = cs.domain.centroid();
    cs.airy.validate();

    // [loads]
    cs.loads.density = num("loads", "density", 0.0);
    cs.loads.thickness = num("loads", "thickness", 0.1);
    cs.loads.alpha_h = num("loads", "alpha_h", 0.0);
    const std::string theta = get("loads", "theta_h_deg").value_or("0");
    cs.theta_diagonal = theta == "diagonal";
    cs.theta_deg = cs.theta_diagonal ? 0.0 : to_double("theta_h_deg", theta);
    const std::string href = get("loads", "h_reference").value_or("upstream");
    if (href == "upstream") {
        cs.h_reference = ReferenceMode::upstream;
    } else if (href == "centroid") {
        cs.h_reference = ReferenceMode::centroid;
    } else {
        const auto xy = to_list("h_reference", href);
        if (xy.size() != 2) throw ConfigError("h_reference expects upstream, centroid or 'x1, x2'");
        cs.h_reference = ReferenceMode::explicit_point;
        cs.h_point = {xy[0], xy[1]};
    }
    if (auto loads = tree.get_child_optional("loads")) {
        std::map<long long, PointLoad> ordered;
        for (const auto& [key, value] : *loads) {
            if (!is_point_load_key(key)) continue;
            const auto v = to_list(key, value.data());
            if (v.size() != 4) throw ConfigError("'" + key + "' expects 'P, x1, x2, sigma'");
            ordered[to_int(key, key.substr(11))] = PointLoad{v[0], {v[1], v[2]}, v[3]};
        }
        for (const auto& [idx, pl] : ordered) {
            (void)idx;
            cs.loads.point_loads.push_back(pl);
        }
    }
    cs.loads.validate();

    // [train]
    auto& t = c.train;
    if (auto v = get("train", "formulation")) t.formulation = train::formulation_from_string(*v);
    auto set_int = [&](const std::string& key, int& field) {
        if (auto v = get("train", key)) field = static_cast<int>(to_int(key, *v));
    };
    auto set_count = [&](const std::string& key, std::size_t& field) {
        if (auto v = get("train", key)) field = to_count(key, *v);
    };
    auto set_num = [&](const std::string& key, double& field) {
        if (auto v = get("train", key)) field = to_double(key, *v);
    };
    auto set_seed = [&](const std::string& key, std::uint64_t& field) {
        if (auto v = get("train", key)) field = to_seed(key, *v);
    };
    set_int("hidden_layers", t.hidden_layers);
    set_int("width", t.width);
    set_num("adam_lr", t.adam_lr);
    set_int("adam_epochs", t.adam_epochs);
    set_int("lbfgs_steps", t.lbfgs_steps);
    set_count("lbfgs_history", t.lbfgs_history);
    set_num("wolfe_c1", t.wolfe_c1);
    set_num("wolfe_c2", t.wolfe_c2);
    set_num("lbfgs_step", t.lbfgs_step);
    set_int("line_search_trials", t.line_search_trials);
    set_count("n_pde", t.n_pde);
    set_count("n_bc", t.n_bc);
    set_count("n_bc_curv", t.n_bc_curv);
    set_int("resample_every", t.resample_every);
    set_num("relobralo_alpha", t.relobralo.alpha);
    set_num("relobralo_rho", t.relobralo.rho);
    set_num("relobralo_tau", t.relobralo.tau);
    set_seed("init_seed", t.init_seed);
    set_seed("sample_seed", t.sample_seed);
    set_seed("validation_seed", t.validation_seed);
    set_seed("weight_seed", t.weight_seed);
    set_count("n_val", t.n_val);
    set_int("validate_every", t.validate_every);
    set_int("checkpoint_every", t.checkpoint_every);
    t.validate();

    // [outputs]
    if (auto v = get("outputs", "directory")) c.outputs.directory = *v;
    if (auto v = get("outputs", "formats")) {
        c.outputs.formats = split(*v, ',');
        for (const auto& f : c.outputs.formats) (void)post::surface_format_from_string(f);
    }
    if (auto v = get("outputs", "grid")) c.outputs.grid = static_cast<int>(to_int("grid", *v));
    if (c.outputs.grid < 2) throw ConfigError("outputs grid must be at least 2");
    if (auto v = get("outputs", "wallclock")) c.outputs.wallclock = to_bool("wallclock", *v);
    t.record_wallclock = c.outputs.wallclock;

    // [reference]
    auto& r = c.reference;
    if (auto v = get("reference", "kind")) r.kind = reference_kind_from_string(*v);
    if (auto v = get("reference", "fd_nx")) r.fd_nx = static_cast<int>(to_int("fd_nx", *v));
    if (auto v = get("reference", "fd_ny")) r.fd_ny = static_cast<int>(to_int("fd_ny", *v));
    if (auto v = get("reference", "manufactured")) r.manufactured = reference::manufactured_from_string(*v);
    if (auto v = get("reference", "compare_points")) r.compare_points = to_count("compare_points", *v);
    if (auto v = get("reference", "compare_seed")) r.compare_seed = to_seed("compare_seed", *v);
    if (r.kind == ReferenceKind::fd && cs.domain.kind != geometry::DomainKind::rectangle)
        throw ConfigError("the FD reference is only available on rectangles; use a manufactured reference");
    if (r.fd_nx < 5 || r.fd_ny < 5) throw ConfigError("FD grid needs at least 5 nodes per axis");
    if (r.compare_points == 0) throw ConfigError("compare_points must be positive");
    return c;
}

RunConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in);
}

RunConfig with_value(const RunConfig& config, const std::string& section, const std::string& key,
                     const std::string& value) {
    pt::ptree tree;
    std::istringstream in(serialize(config));
    pt::read_ini(in, tree);
    tree.put(pt::ptree::path_type(section + "/" + key, '/'), value);
    std::ostringstream out;
    pt::write_ini(out, tree);
    return parse_string(out.str());
}

std::string serialize(const RunConfig& c) {
    std::ostringstream o;
    const auto& cs = c.case_;
    o << "[case]\n";
    o << "domain = " << geometry::to_string(cs.domain.kind) << '\n';
    switch (cs.domain.kind) {
        case geometry::DomainKind::rectangle:
            o << "length = " << fmt(cs.domain.length) << "\nwidth = " << fmt(cs.domain.width) << '\n';
            o << "arch_height = " << fmt(cs.profile.arch_height) << '\n';
            break;
        case geometry::DomainKind::disk:
            o << "radius = " << fmt(cs.domain.r_out) << '\n';
            break;
        case geometry::DomainKind::annulus:
            o << "r_in = " << fmt(cs.domain.r_in) << "\nr_out = " << fmt(cs.domain.r_out) << '\n';
            break;
    }
    if (cs.domain.circular()) {
        o << "outer_a0 = " << fmt(cs.profile.outer.a0) << '\n';
        o << "outer_cos = " << fmt_list(cs.profile.outer.cos_coeffs) << '\n';
        o << "outer_sin = " << fmt_list(cs.profile.outer.sin_coeffs) << '\n';
    }
    if (cs.domain.kind == geometry::DomainKind::annulus) {
        o << "inner_a0 = " << fmt(cs.profile.inner.a0) << '\n';
        o << "inner_cos = " << fmt_list(cs.profile.inner.cos_coeffs) << '\n';
        o << "inner_sin = " << fmt_list(cs.profile.inner.sin_coeffs) << '\n';
    }

    o << "\n[airy]\n";
    o << "l1 = " << fmt(cs.airy.l1) << "\nl2 = " << fmt(cs.airy.l2) << "\nl3 = " << fmt(cs.airy.l3) << '\n';
    o << "state = " << to_string(cs.airy.state) << '\n';
    o << "c0 = " << fmt(cs.airy.c0) << "\nc1 = " << fmt(cs.airy.c1) << "\nc2 = " << fmt(cs.airy.c2) << '\n';

    o << "\n[loads]\n";
    o << "density = " << fmt(cs.loads.density) << "\nthickness = " << fmt(cs.loads.thickness) << '\n';
    o << "alpha_h = " << fmt(cs.loads.alpha_h) << '\n';
    o << "theta_h_deg = " << (cs.theta_diagonal ? std::string("diagonal") : fmt(cs.theta_deg)) << '\n';
    switch (cs.h_reference) {
        case ReferenceMode::upstream: o << "h_reference = upstream\n"; break;
        case ReferenceMode::centroid: o << "h_reference = centroid\n"; break;
        case ReferenceMode::explicit_point:
            o << "h_reference = " << fmt(cs.h_point.x1) << ", " << fmt(cs.h_point.x2) << '\n';
            break;
    }
    for (std::size_t i = 0; i < cs.loads.point_loads.size(); ++i) {
        const auto& pl = cs.loads.point_loads[i];
        o << "point_load_" << i + 1 << " = " << fmt(pl.magnitude) << ", " << fmt(pl.center.x1) << ", "
          << fmt(pl.center.x2) << ", " << fmt(pl.spread) << '\n';
    }

    const auto& t = c.train;
    o << "\n[train]\n";
    o << "formulation = " << train::to_string(t.formulation) << '\n';
    o << "hidden_layers = " << t.hidden_layers << "\nwidth = " << t.width << '\n';
    o << "adam_lr = " << fmt(t.adam_lr) << "\nadam_epochs = " << t.adam_epochs << '\n';
    o << "lbfgs_steps = " << t.lbfgs_steps << "\nlbfgs_history = " << t.lbfgs_history << '\n';
    o << "wolfe_c1 = " << fmt(t.wolfe_c1) << "\nwolfe_c2 = " << fmt(t.wolfe_c2) << '\n';
    o << "lbfgs_step = " << fmt(t.lbfgs_step) << "\nline_search_trials = " << t.line_search_trials << '\n';
    o << "n_pde = " << t.n_pde << "\nn_bc = " << t.n_bc << "\nn_bc_curv = " << t.n_bc_curv << '\n';
    o << "resample_every = " << t.resample_every << '\n';
    o << "relobralo_alpha = " << fmt(t.relobralo.alpha) << "\nrelobralo_rho = " << fmt(t.relobralo.rho)
      << "\nrelobralo_tau = " << fmt(t.relobralo.tau) << '\n';
    o << "init_seed = " << t.init_seed << "\nsample_seed = " << t.sample_seed
      << "\nvalidation_seed = " << t.validation_seed << "\nweight_seed = " << t.weight_seed << '\n';
    o << "n_val = " << t.n_val << "\nvalidate_every = " << t.validate_every
      << "\ncheckpoint_every = " << t.checkpoint_every << '\n';

    o << "\n[outputs]\n";
    o << "directory = " << c.outputs.directory << '\n';
    std::string formats;
    for (std::size_t i = 0; i < c.outputs.formats.size(); ++i) formats += (i ? ", " : "") + c.outputs.formats[i];
    o << "formats = " << formats << '\n';
    o << "grid = " << c.outputs.grid << "\nwallclock = " << (c.outputs.wallclock ? "true" : "false") << '\n';

    const auto& r = c.reference;
    o << "\n[reference]\n";
    o << "kind = " << to_string(r.kind) << '\n';
    o << "fd_nx = " << r.fd_nx << "\nfd_ny = " << r.fd_ny << '\n';
    o << "manufactured = " << reference::to_string(r.manufactured) << '\n';
    o << "compare_points = " << r.compare_points << "\ncompare_seed = " << r.compare_seed << '\n';
    return o.str();
}

RunConfig preset(const std::string& name) {
    RunConfig c;
    auto& cs = c.case_;
    if (name == "rectangle") {
        cs.domain = geometry::Domain::rectangle(13.0, 8.0);
        cs.profile.arch_height = 2.0;
        cs.airy.l1 = 2.0;
        cs.airy.l3 = 2.0;
        cs.airy.state = StressState::compression;
        cs.loads.density = 18.0;
        cs.loads.alpha_h = 0.5;
        cs.theta_diagonal = true;
        cs.loads.point_loads = {PointLoad{5.0, {-1.5, 0.0}, 0.5}};
        c.reference.kind = ReferenceKind::fd;
    } else if (name == "three_leg") {
        cs.domain = geometry::Domain::annulus(0.6, 6.0);
        cs.profile.outer.a0 = 1.5;
        cs.profile.outer.cos_coeffs = {0.0, 0.0, 1.5};
        cs.profile.inner.a0 = 3.0;
        cs.airy.l1 = 3.0;
        cs.airy.l3 = 3.0;
        cs.airy.state = StressState::compression;
        cs.loads.density = 18.0;
        cs.loads.alpha_h = 0.3;
        cs.theta_deg = 90.0;
        c.reference.kind = ReferenceKind::manufactured;
        c.reference.manufactured = reference::ManufacturedId::annulus_poly;
    } else if (name == "four_leg") {
        cs.domain = geometry::Domain::disk(6.0);
        cs.profile.outer.a0 = 1.5;
        cs.profile.outer.cos_coeffs = {0.0, 0.0, 0.0, 1.5};
        cs.airy.l1 = 5.0;
        cs.airy.l3 = 5.0;
        cs.airy.state = StressState::tension;
        cs.loads.density = 10.0;
        cs.loads.alpha_h = 0.5;
        cs.theta_deg = 0.0;
        cs.loads.point_loads = {PointLoad{15.0, {-2.5, -2.5}, 0.5}};
        c.reference.kind = ReferenceKind::manufactured;
        c.reference.manufactured = reference::ManufacturedId::disk_quartic;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected rectangle, three_leg or four_leg)");
    }
    cs.loads.thickness = 0.1;
    cs.airy.centroid = cs.domain.centroid();
    c.outputs.directory = "out/" + name;
    if (cs.domain.circular()) c.train.n_bc_curv = 1024;
    return c;
}

std::string resolve_output_directory(const OutputConfig& outputs) {
    const std::filesystem::path dir(outputs.directory);
    const char* root = std::getenv("MEA_OUTPUT_ROOT");
    if (root && *root && dir.is_relative()) return (std::filesystem::path(root) / dir).string();
    return dir.string();
}

BuiltCase build_case(const RunConfig& config, bool with_refinement_estimate) {
    const auto& cs = config.case_;
    cs.domain.validate();
    BuiltCase out;

    LoadModel loads = cs.loads;
    const double theta_rad = cs.theta_deg * kPi / 180.0;
    loads.theta_h = cs.theta_diagonal ? std::atan2(cs.domain.width, cs.domain.length) : theta_rad;
    if (cs.theta_diagonal && cs.domain.circular()) throw ConfigError("theta_h_deg = diagonal needs a rectangle");
    loads.reference = resolve_reference(cs.domain, loads, cs.h_reference, cs.h_point);
    AiryField airy = cs.airy;
    airy.centroid = cs.domain.centroid();

    auto& pb = out.problem;
    pb.domain = cs.domain;
    pb.profile = cs.profile;
    out.context = std::make_shared<PdeContext>(airy, loads);

    const auto& ref = config.reference;
    if (ref.kind == ReferenceKind::manufactured) {
        auto mc = reference::make_manufactured(cs.domain, airy, loads, ref.manufactured,
                                               cs.domain.circular() ? 2.0 : cs.profile.arch_height);
        out.context = mc.context;
        pb.profile = mc.profile;
        Rng rng(ref.compare_seed);
        pb.oracle_points = geometry::sample_interior(cs.domain, ref.compare_points, rng).points;
        pb.oracle = [f = mc.solution](const Point& p) { return f(p).f; };
        out.manufactured = std::move(mc);
    } else if (ref.kind == ReferenceKind::fd) {
        if (cs.domain.kind != geometry::DomainKind::rectangle)
            throw ConfigError("the FD reference is only available on rectangles");
        if (with_refinement_estimate) {
            auto est = reference::fd_solve_with_estimate(cs.domain, *out.context, cs.profile, ref.fd_nx, ref.fd_ny);
            out.fd_refinement_error = est.relative_error;
            out.fd = std::make_shared<reference::GridSolution>(std::move(est.fine));
        } else {
            out.fd = std::make_shared<reference::GridSolution>(
                reference::fd_solve_rectangle(cs.domain, *out.context, cs.profile, ref.fd_nx, ref.fd_ny));
        }
        pb.oracle_points = out.fd->interior_nodes().points;
        pb.oracle = [g = out.fd](const Point& p) { return g->interpolate(p); };
    }
    pb.context = out.context;
    return out;
}

}  // namespace mea::config
