#include "straggler/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace straggler {

namespace {

using Settings = std::map<std::string, std::string>;

const Settings& global_defaults() {
    static const Settings d{{"seed", "1"}, {"out", "results"}, {"jobs", "1"}};
    return d;
}

const Settings& mode_defaults(Mode mode) {
    static const Settings sweep{
        {"n", "50"},
        {"s", "200"},
        {"lr", "0.1"},
        {"lipschitz", "2"},
        {"grad_variance", "10"},
        {"convexity", "1"},
        {"initial_error", "1"},
        {"target_error", "1e-3"},
        {"comp_shift", "0"},
        {"comp_rate_min", "0.05"},
        {"comp_rate_max", "20"},
        {"comp_rate_points", "10"},
        {"comm_shift_min", "0.05"},
        {"comm_shift_max", "20"},
        {"comm_shift_points", "10"},
        {"grid_spacing", "log"},
        {"accounting", "expected"},
        {"comp_cost", "aggregated"},
        {"beta_rule", "auto"},
        {"beta_levels", "0"},
        {"k_cap", "0"},
    };
    static const Settings simulate{
        {"variant", "simplified"},
        {"comp_rate", "1"},
        {"comm_rate", "1"},
        {"comm_shift", "0.01"},
        {"comp_shift", "0"},
        {"n", "20"},
        {"samples", "400"},
        {"features", "10"},
        {"feature_max", "100"},
        {"label_max", "10"},
        {"lr", "auto"},
        {"lr_factor", "0.01"},
        {"strategies", "adaptive_k_beta,adaptive_k"},
        {"beta_levels", "5"},
        {"initial_beta", "0.2"},
        {"k_cap", "10"},
        {"beta_rule", "auto"},
        {"diagnostic", "distance"},
        {"burn_in_factor", "0.25"},
        {"accumulate_during_burn_in", "false"},
        {"checkpoint_ratio", "2"},
        {"slope_threshold", "0.5"},
        {"ratio_threshold", "1"},
        {"runs", "100"},
        {"max_time", "1500"},
        {"max_iterations", "10000000"},
        {"target_error", "0"},
        {"grid_points", "2001"},
        {"quantile_band", "0.8"},
        {"error_levels", "0.02"},
        {"record_every", "1"},
        {"divergence_factor", "1e6"},
        {"clip_comm", "0"},
        {"clip_comp", "0"},
        {"write_trajectories", "false"},
    };
    static const Settings order_stats{
        {"n_values", "1,2,3,5,8,10,20,50"},
        {"betas", "0.25,0.5,1"},
        {"comp_rates", "0.5,2"},
        {"comm_rates", "1,2,4"},
        {"comm_shift", "0.05"},
        {"comp_shift", "0.1"},
        {"simplified", "true"},
        {"generalized", "true"},
        {"mc_samples", "200000"},
        {"closed_form_max_n", "12"},
    };
    switch (mode) {
        case Mode::TheorySweep: return sweep;
        case Mode::Simulate: return simulate;
        case Mode::OrderStats: return order_stats;
    }
    return sweep;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw InvalidArgument("invalid value '" + value + "' for key '" + key + "'");
}

double to_double(const Settings& s, const std::string& key) {
    const auto& v = s.at(key);
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x)) bad_value(key, v);
        return x;
    } catch (const std::logic_error&) {
        bad_value(key, v);
    }
}

long long to_integer(const Settings& s, const std::string& key) {
    const auto& v = s.at(key);
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) bad_value(key, v);
        return x;
    } catch (const std::logic_error&) {
        bad_value(key, v);
    }
}

int to_int(const Settings& s, const std::string& key) {
    const long long x = to_integer(s, key);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        bad_value(key, s.at(key));
    return static_cast<int>(x);
}

bool to_bool(const Settings& s, const std::string& key) {
    const auto v = boost::algorithm::to_lower_copy(s.at(key));
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, s.at(key));
}

std::vector<std::string> to_list(const Settings& s, const std::string& key) {
    std::vector<std::string> items;
    boost::algorithm::split(items, s.at(key), boost::algorithm::is_any_of(","));
    for (auto& item : items) boost::algorithm::trim(item);
    std::erase_if(items, [](const std::string& x) { return x.empty(); });
    if (items.empty()) throw InvalidArgument("key '" + key + "' needs a non-empty list");
    return items;
}

std::vector<double> to_double_list(const Settings& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : to_list(s, key)) out.push_back(to_double({{key, item}}, key));
    return out;
}

std::vector<int> to_int_list(const Settings& s, const std::string& key) {
    std::vector<int> out;
    for (const auto& item : to_list(s, key)) out.push_back(to_int({{key, item}}, key));
    return out;
}

std::vector<double> axis(const Settings& s, const std::string& prefix, bool logarithmic) {
    const double lo = to_double(s, prefix + "_min");
    const double hi = to_double(s, prefix + "_max");
    const int points = to_int(s, prefix + "_points");
    if (points < 1 || !(lo > 0.0) || hi < lo) throw InvalidArgument("invalid grid for " + prefix);
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        v[i] = logarithmic ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                           : lo + f * (hi - lo);
    }
    return v;
}

BetaRule to_beta_rule(const Settings& s) {
    const auto& v = s.at("beta_rule");
    if (v == "auto") return BetaRule::Auto;
    if (v == "closed_form") return BetaRule::ClosedForm;
    if (v == "numeric") return BetaRule::Numeric;
    bad_value("beta_rule", v);
}

void build_sweep(const Settings& s, SweepConfig& c) {
    c.n = to_int(s, "n");
    c.s = to_int(s, "s");
    c.convergence = {to_double(s, "lr"), to_double(s, "lipschitz"), to_double(s, "grad_variance"),
                     to_double(s, "convexity"), to_double(s, "initial_error")};
    c.convergence.validate();
    c.target_error = to_double(s, "target_error");
    c.comp_shift = to_double(s, "comp_shift");
    const auto& spacing = s.at("grid_spacing");
    if (spacing != "log" && spacing != "linear") bad_value("grid_spacing", spacing);
    c.comp_rates = axis(s, "comp_rate", spacing == "log");
    c.comm_shifts = axis(s, "comm_shift", spacing == "log");
    const auto& acc = s.at("accounting");
    if (acc == "expected") c.planner.accounting = IterationAccounting::Expected;
    else if (acc == "ceiled") c.planner.accounting = IterationAccounting::Ceiled;
    else bad_value("accounting", acc);
    const auto& cost = s.at("comp_cost");
    if (cost == "aggregated") c.planner.comp_cost = CompCostModel::Aggregated;
    else if (cost == "all_workers") c.planner.comp_cost = CompCostModel::AllWorkers;
    else bad_value("comp_cost", cost);
    c.planner.ladder.rule = to_beta_rule(s);
    c.planner.ladder.beta_levels = to_int(s, "beta_levels");
    c.planner.ladder.k_cap = to_int(s, "k_cap");
    if (c.n < 1 || c.s < 1) throw InvalidArgument("n and s must be positive");
}

void build_simulate(const Settings& s, SimulateConfig& c) {
    const auto& variant = s.at("variant");
    if (variant == "simplified")
        c.model = DelayModel::simplified(to_double(s, "comp_rate"), to_double(s, "comm_shift"),
                                         to_double(s, "comp_shift"));
    else if (variant == "generalized")
        c.model = DelayModel::generalized(to_double(s, "comp_rate"), to_double(s, "comm_rate"),
                                          to_double(s, "comp_shift"), to_double(s, "comm_shift"));
    else bad_value("variant", variant);
    c.model.validate();

    c.n = to_int(s, "n");
    c.samples = to_int(s, "samples");
    c.features = to_int(s, "features");
    c.feature_max = to_int(s, "feature_max");
    c.label_max = to_int(s, "label_max");
    if (c.n < 1 || c.samples % c.n != 0) throw InvalidArgument("n must divide the sample count");

    const auto& lr = s.at("lr");
    c.lr = lr == "auto" ? 0.0 : to_double(s, "lr");
    c.lr_factor = to_double(s, "lr_factor");
    if (lr != "auto" && !(c.lr > 0.0)) bad_value("lr", lr);
    if (!(c.lr_factor > 0.0)) bad_value("lr_factor", s.at("lr_factor"));

    c.strategies.clear();
    for (const auto& name : to_list(s, "strategies")) c.strategies.push_back(Strategy::parse(name));

    auto& ladder = c.base.ladder;
    ladder.beta_levels = to_int(s, "beta_levels");
    if (ladder.beta_levels < 1) bad_value("beta_levels", s.at("beta_levels"));
    const double initial_beta = to_double(s, "initial_beta");
    ladder.initial_beta_units = static_cast<int>(std::lround(initial_beta * ladder.beta_levels));
    if (ladder.initial_beta_units < 1 || ladder.initial_beta_units > ladder.beta_levels ||
        std::abs(ladder.initial_beta_units - initial_beta * ladder.beta_levels) > 1e-9)
        bad_value("initial_beta", s.at("initial_beta"));
    ladder.k_cap = to_int(s, "k_cap");
    ladder.rule = to_beta_rule(s);

    auto& diag = c.base.diagnostic;
    const auto& kind = s.at("diagnostic");
    if (kind == "distance") diag.kind = DiagnosticKind::Distance;
    else if (kind == "inner_product") diag.kind = DiagnosticKind::InnerProduct;
    else if (kind == "windowed_inner_product") diag.kind = DiagnosticKind::WindowedInnerProduct;
    else bad_value("diagnostic", kind);
    diag.burn_in_factor = to_double(s, "burn_in_factor");
    diag.accumulate_during_burn_in = to_bool(s, "accumulate_during_burn_in");
    diag.checkpoint_ratio = to_double(s, "checkpoint_ratio");
    diag.slope_threshold = to_double(s, "slope_threshold");
    diag.ratio_threshold = to_double(s, "ratio_threshold");
    if (!(diag.ratio_threshold > 0.0)) bad_value("ratio_threshold", s.at("ratio_threshold"));
    if (!(diag.checkpoint_ratio > 1.0)) bad_value("checkpoint_ratio", s.at("checkpoint_ratio"));

    c.runs = to_int(s, "runs");
    c.base.stop.max_time = to_double(s, "max_time");
    c.base.stop.max_iterations = to_integer(s, "max_iterations");
    c.base.stop.target_error = to_double(s, "target_error");
    c.grid_points = to_int(s, "grid_points");
    c.quantile_band = to_double(s, "quantile_band");
    c.error_levels = to_double_list(s, "error_levels");
    c.base.record_every = to_integer(s, "record_every");
    c.base.divergence_factor = to_double(s, "divergence_factor");
    c.clip_comm = to_double(s, "clip_comm");
    c.clip_comp = to_double(s, "clip_comp");
    c.write_trajectories = to_bool(s, "write_trajectories");
    if (c.runs < 2) bad_value("runs", s.at("runs"));
    if (!(c.base.stop.max_time > 0.0)) bad_value("max_time", s.at("max_time"));
    if (c.grid_points < 2) bad_value("grid_points", s.at("grid_points"));
    if (!(c.quantile_band > 0.0 && c.quantile_band <= 1.0))
        bad_value("quantile_band", s.at("quantile_band"));
    if (c.base.record_every < 1) bad_value("record_every", s.at("record_every"));
}

void build_order_stats(const Settings& s, OrderStatsConfig& c) {
    c.n_values = to_int_list(s, "n_values");
    c.betas = to_double_list(s, "betas");
    c.comp_rates = to_double_list(s, "comp_rates");
    c.comm_rates = to_double_list(s, "comm_rates");
    c.comm_shift = to_double(s, "comm_shift");
    c.comp_shift = to_double(s, "comp_shift");
    c.simplified = to_bool(s, "simplified");
    c.generalized = to_bool(s, "generalized");
    c.mc_samples = to_integer(s, "mc_samples");
    c.closed_form_max_n = to_int(s, "closed_form_max_n");
    for (int n : c.n_values)
        if (n < 1) bad_value("n_values", s.at("n_values"));
    for (double b : c.betas)
        if (!(b > 0.0 && b <= 1.0)) bad_value("betas", s.at("betas"));
    if (c.mc_samples < 10000) bad_value("mc_samples", s.at("mc_samples"));
}

void assign(Settings& target, const Settings& defaults, const std::string& key,
            const std::string& value, const std::string& where) {
    if (!defaults.contains(key)) throw InvalidArgument("unknown key '" + key + "' in " + where);
    target[key] = value;
}

}  // namespace

Mode parse_mode(const std::string& text) {
    if (text == "theory_sweep") return Mode::TheorySweep;
    if (text == "simulate") return Mode::Simulate;
    if (text == "order_stats") return Mode::OrderStats;
    throw InvalidArgument("unknown mode '" + text + "'");
}

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::TheorySweep: return "theory_sweep";
        case Mode::Simulate: return "simulate";
        case Mode::OrderStats: return "order_stats";
    }
    return "unknown";
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t ScenarioConfig::hash() const {
    std::string canon = "mode=" + mode_name(mode) + "\n";
    for (const auto& [k, v] : settings) canon += k + "=" + v + "\n";
    return fnv1a(canon);
}

ScenarioConfig parse_scenario(Mode mode, const std::string& ini_text,
                              const std::vector<std::string>& overrides) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(ini_text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }

    const std::string section = mode_name(mode);
    const Settings& defaults = mode_defaults(mode);
    Settings global = global_defaults();
    Settings local = defaults;

    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            assign(global, global_defaults(), name, node.data(), "the top level");
        } else if (name == section) {
            for (const auto& [key, leaf] : node) assign(local, defaults, key, leaf.data(), "[" + name + "]");
        } else if (name != "theory_sweep" && name != "simulate" && name != "order_stats") {
            throw InvalidArgument("unknown section [" + name + "]");
        }
    }

    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidArgument("override '" + item + "' is not key=value");
        std::string key = boost::algorithm::trim_copy(item.substr(0, eq));
        const std::string value = boost::algorithm::trim_copy(item.substr(eq + 1));
        if (const auto dot = key.find('.'); dot != std::string::npos) {
            if (key.substr(0, dot) != section)
                throw InvalidArgument("override '" + item + "' targets another mode");
            key = key.substr(dot + 1);
        }
        if (global_defaults().contains(key)) global[key] = value;
        else assign(local, defaults, key, value, "overrides");
    }

    ScenarioConfig c;
    c.mode = mode;
    const long long seed = to_integer(global, "seed");
    if (seed < 0) bad_value("seed", global.at("seed"));
    c.seed = static_cast<std::uint64_t>(seed);
    c.out_dir = global.at("out");
    c.jobs = to_int(global, "jobs");
    if (c.jobs < 1) bad_value("jobs", global.at("jobs"));
    c.settings = local;
    c.settings["seed"] = global.at("seed");

    switch (mode) {
        case Mode::TheorySweep: build_sweep(local, c.sweep); break;
        case Mode::Simulate: build_simulate(local, c.simulate); break;
        case Mode::OrderStats: build_order_stats(local, c.order_stats); break;
    }
    return c;
}

ScenarioConfig load_scenario(Mode mode, const std::string& path,
                             const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(mode, text.str(), overrides);
}

nlohmann::json scenario_to_json(const ScenarioConfig& config) {
    nlohmann::json j;
    j["mode"] = mode_name(config.mode);
    j["seed"] = config.seed;
    j["config_hash"] = config.hash();
    j["settings"] = config.settings;
    return j;
}

}  // namespace straggler
