#include "straggler/output.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace straggler {

namespace {

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

class FileSet {
public:
    FileSet(const ScenarioConfig& config) : config_(config), dir_(config.out_dir) {
        std::filesystem::create_directories(dir_);
    }

    template <class Writer>
    void csv(const std::string& name, Writer&& write) {
        std::ofstream os = open(name);
        os << csv_header_comment(config_) << '\n';
        write(os);
    }

    void json(const std::string& name, const nlohmann::json& j) {
        std::ofstream os = open(name);
        os << j.dump(2) << '\n';
    }

    std::vector<std::filesystem::path> written;

private:
    std::ofstream open(const std::string& name) {
        const auto path = dir_ / name;
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        written.push_back(path);
        return os;
    }

    const ScenarioConfig& config_;
    std::filesystem::path dir_;
};

}  // namespace

std::string csv_header_comment(const ScenarioConfig& config) {
    return std::string("# straggler-lab ") + kVersion + " mode=" + mode_name(config.mode) +
           " config_hash=" + hex(config.hash()) + " seed=" + std::to_string(config.seed);
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
    os << "comp_rate,comm_shift,status,runtime_akb,runtime_ak,runtime_ratio,comm_akb,comm_ak,"
          "comm_overhead,comp_akb,comp_ak,comp_reduction,stages_akb,stages_ak\n";
    for (const auto& c : result.cells) {
        os << num(c.comp_rate) << ',' << num(c.comm_shift) << ',';
        if (!c.ok) {
            os << "unreachable,,,,,,,,,,,\n";
            continue;
        }
        const auto& a = c.adaptive_k_beta;
        const auto& b = c.adaptive_k;
        os << "ok," << num(a.total_time) << ',' << num(b.total_time) << ',' << num(c.runtime_ratio)
           << ',' << num(a.cost.comm_units) << ',' << num(b.cost.comm_units) << ','
           << num(c.comm_overhead) << ',' << num(a.cost.comp_units) << ','
           << num(b.cost.comp_units) << ',' << num(c.comp_reduction) << ',' << a.stages.size()
           << ',' << b.stages.size() << '\n';
    }
}

nlohmann::json sweep_schedules_json(const SweepResult& result) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : result.cells) {
        nlohmann::json j{{"comp_rate", c.comp_rate}, {"comm_shift", c.comm_shift}, {"ok", c.ok}};
        if (c.ok) {
            j["adaptive_k_beta"] = schedule_to_json(c.adaptive_k_beta);
            j["adaptive_k"] = schedule_to_json(c.adaptive_k);
        } else {
            j["error"] = c.error;
        }
        cells.push_back(std::move(j));
    }
    return nlohmann::json{{"cells", cells}};
}

void write_error_vs_time_csv(std::ostream& os, const SimulationOutcome& outcome) {
    os << "strategy,t,median_error,lower_error,upper_error,mean_error,mean_comm,mean_comp\n";
    for (const auto& so : outcome.strategies) {
        const auto& s = so.summary;
        for (std::size_t i = 0; i < s.grid.size(); ++i)
            os << s.strategy << ',' << num(s.grid[i]) << ',' << num(s.median_error[i]) << ','
               << num(s.lower_error[i]) << ',' << num(s.upper_error[i]) << ','
               << num(s.mean_error[i]) << ',' << num(s.mean_comm[i]) << ','
               << num(s.mean_comp[i]) << '\n';
    }
}

void write_levels_csv(std::ostream& os, const SimulationOutcome& outcome) {
    os << "strategy,level,reached,time,comm,comp\n";
    for (const auto& so : outcome.strategies)
        for (const auto& m : so.summary.levels)
            os << so.summary.strategy << ',' << num(m.level) << ',' << (m.reached ? 1 : 0) << ','
               << num(m.time) << ',' << num(m.comm) << ',' << num(m.comp) << '\n';
}

void write_comparison_csv(std::ostream& os, const SimulationOutcome& outcome,
                          const std::string& baseline) {
    os << "strategy,baseline,level,reached,time_ratio,comp_reduction,comm_increase\n";
    const auto& base = outcome.find(baseline).summary;
    for (const auto& so : outcome.strategies) {
        if (so.summary.strategy == baseline) continue;
        for (const auto& m : base.levels) {
            const auto c = compare_at_level(so.summary, base, m.level);
            os << so.summary.strategy << ',' << baseline << ',' << num(c.level) << ','
               << (c.reached ? 1 : 0) << ',';
            if (c.reached)
                os << num(c.time_ratio) << ',' << num(c.comp_reduction) << ','
                   << num(c.comm_increase);
            else
                os << ",,";
            os << '\n';
        }
    }
}

void write_cost_vs_error_csv(std::ostream& os, const SimulationOutcome& outcome, double clip_comm,
                             double clip_comp) {
    os << "strategy,mean_error,mean_comm,mean_comp\n";
    for (const auto& so : outcome.strategies) {
        const auto& s = so.summary;
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
            if (clip_comm > 0.0 && s.mean_comm[i] > clip_comm) break;
            if (clip_comp > 0.0 && s.mean_comp[i] > clip_comp) break;
            os << s.strategy << ',' << num(s.mean_error[i]) << ',' << num(s.mean_comm[i]) << ','
               << num(s.mean_comp[i]) << '\n';
        }
    }
}

void write_trajectories_csv(std::ostream& os, const SimulationOutcome& outcome) {
    os << "run_id,strategy,t,error,comm,comp,stage,k,beta\n";
    for (const auto& so : outcome.strategies)
        for (const auto& run : so.trajectories)
            for (const auto& p : run.trajectory)
                os << run.run_id << ',' << run.strategy << ',' << num(p.t) << ',' << num(p.error)
                   << ',' << num(p.comm) << ',' << num(p.comp) << ',' << p.stage << ',' << p.k
                   << ',' << num(p.beta) << '\n';
}

nlohmann::json simulation_summary_json(const SimulationOutcome& outcome) {
    nlohmann::json strategies = nlohmann::json::array();
    for (const auto& so : outcome.strategies) {
        nlohmann::json levels = nlohmann::json::array();
        for (const auto& m : so.summary.levels)
            levels.push_back({{"level", m.level},
                              {"reached", m.reached},
                              {"time", m.time},
                              {"comm", m.comm},
                              {"comp", m.comp}});
        strategies.push_back({{"strategy", so.summary.strategy},
                              {"runs", so.summary.runs},
                              {"diverged", so.diverged},
                              {"mean_stages", so.mean_stages},
                              {"mean_iterations", so.mean_iterations},
                              {"levels", levels}});
    }
    return {{"lr", outcome.lr},
            {"initial_error", outcome.initial_error},
            {"f_star", outcome.f_star},
            {"lipschitz", outcome.lipschitz},
            {"convexity", outcome.convexity},
            {"ridge_used", outcome.ridge_used},
            {"strategies", strategies}};
}

void write_order_stats_csv(std::ostream& os, const std::vector<OrderStatRow>& rows) {
    os << "variant,n,k,beta,comp_rate,comm_rate,equal_rates,closed_form,quadrature,mc,mc_stderr,"
          "rel_closed_vs_mc,rel_quadrature_vs_mc,rel_closed_vs_quadrature\n";
    for (const auto& r : rows)
        os << r.variant << ',' << r.n << ',' << r.k << ',' << num(r.beta) << ','
           << num(r.comp_rate) << ',' << num(r.comm_rate) << ',' << (r.equal_rates ? 1 : 0) << ','
           << num(r.closed_form) << ',' << num(r.quadrature) << ',' << num(r.mc) << ','
           << num(r.mc_stderr) << ',' << num(r.rel_closed_vs_mc) << ','
           << num(r.rel_quadrature_vs_mc) << ',' << num(r.rel_closed_vs_quadrature) << '\n';
}

std::vector<std::filesystem::path> run_scenario(const ScenarioConfig& config, std::ostream& log) {
    FileSet files(config);
    files.json("config.json", scenario_to_json(config));

    switch (config.mode) {
        case Mode::TheorySweep: {
            const auto result = run_theory_sweep(config.sweep, config.jobs);
            files.csv("sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, result); });
            files.json("schedules.json", sweep_schedules_json(result));
            int ok = 0;
            for (const auto& c : result.cells) ok += c.ok;
            log << "theory_sweep: " << ok << '/' << result.cells.size() << " grid points reachable\n";
            if (const auto* best = max_gain_cell(result))
                log << "max gain at comp_rate=" << num(best->comp_rate)
                    << " comm_shift=" << num(best->comm_shift)
                    << ": runtime ratio " << num(best->runtime_ratio) << ", comm overhead "
                    << num(best->comm_overhead) << ", comp reduction "
                    << num(best->comp_reduction) << '\n';
            break;
        }
        case Mode::Simulate: {
            const auto& sc = config.simulate;
            const auto outcome = run_simulation_experiment(sc, config.seed, config.jobs);
            files.csv("error_vs_time.csv",
                      [&](std::ostream& os) { write_error_vs_time_csv(os, outcome); });
            files.csv("levels.csv", [&](std::ostream& os) { write_levels_csv(os, outcome); });
            files.csv("cost_vs_error.csv", [&](std::ostream& os) {
                write_cost_vs_error_csv(os, outcome, sc.clip_comm, sc.clip_comp);
            });
            const bool has_baseline = std::any_of(
                sc.strategies.begin(), sc.strategies.end(),
                [](const Strategy& s) { return s.kind == StrategyKind::AdaptiveK; });
            if (has_baseline)
                files.csv("comparison.csv", [&](std::ostream& os) {
                    write_comparison_csv(os, outcome, Strategy::adaptive_k().name());
                });
            if (sc.write_trajectories)
                files.csv("trajectories.csv",
                          [&](std::ostream& os) { write_trajectories_csv(os, outcome); });
            files.json("summary.json", simulation_summary_json(outcome));
            log << "simulate: lr=" << num(outcome.lr) << " initial_error="
                << num(outcome.initial_error) << '\n';
            for (const auto& so : outcome.strategies) {
                log << "  " << so.summary.strategy << ": " << so.summary.runs << " runs";
                if (so.diverged) log << " (" << so.diverged << " diverged, excluded)";
                log << '\n';
            }
            break;
        }
        case Mode::OrderStats: {
            const auto rows = run_order_stats(config.order_stats, config.seed, config.jobs);
            files.csv("order_stats.csv", [&](std::ostream& os) { write_order_stats_csv(os, rows); });
            double worst_mc = 0.0, worst_quad = 0.0;
            for (const auto& r : rows) {
                if (!std::isnan(r.rel_closed_vs_mc)) worst_mc = std::max(worst_mc, r.rel_closed_vs_mc);
                if (!std::isnan(r.rel_closed_vs_quadrature))
                    worst_quad = std::max(worst_quad, r.rel_closed_vs_quadrature);
            }
            log << "order_stats: " << rows.size() << " rows, max rel. error closed vs MC "
                << num(worst_mc) << ", closed vs quadrature " << num(worst_quad) << '\n';
            break;
        }
    }
    return files.written;
}

}  // namespace straggler
