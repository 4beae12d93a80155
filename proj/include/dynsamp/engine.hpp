// Orchestration: the tick loop with its fixed sub-step order, deterministic
// named RNG streams per module and per design, replicate fan-out, snapshot
// resume, paired scenario comparison, and the file outputs.
//
// Sub-step order within one tick: group centers, node positions, deaths,
// insertions, link dissolution, link formation, importation, transmission,
// progression, intervention (seek/treat, dropout, cure), registered sampling
// designs (tracing, random selection, attrition, activity decay), metrics.
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dynsamp/config.hpp"
#include "dynsamp/demography.hpp"
#include "dynsamp/link_dynamics.hpp"
#include "dynsamp/metrics.hpp"
#include "dynsamp/snapshot.hpp"
#include "dynsamp/social_space.hpp"

namespace dynsamp {

struct DesignRuntime {
    std::string name;
    DesignSpec spec;
    SampleState sample;
};

class Simulation {
public:
    // Fresh world at step 0: groups placed, population at target, epidemic
    // and design seeds selected.
    Simulation(const ScenarioConfig& cfg, std::uint64_t base_seed, int replicate)
        : cfg_(cfg) {
        init_streams(base_seed, replicate);
        treat_.spec = &cfg_.intervention;

        world_.groups = init_groups(cfg_.space, cfg_.demography.pop_target, stream("space"));
        RngStream& demo = stream("demography");
        const double sd = node_stationary_sd(cfg_.space);
        for (const auto& g : world_.groups) {
            for (int k = 0; k < g.target_size; ++k) {
                const Sex sex = demo.bernoulli(0.5) ? Sex::F : Sex::M;
                const Vec2 pos = reflect_into({g.center.x + demo.normal(0.0, sd),
                                               g.center.y + demo.normal(0.0, sd)},
                                              cfg_.space.region_side);
                world_.add_node(pos, g.id, sex, 0);
            }
        }

        if (cfg_.epi.initial_infected > 0)
            initial_infections_ = seed_epidemic(world_, epi_, cfg_.epi, stream("epi"));

        for (const auto& [name, spec] : cfg_.designs) {
            designs_.push_back(DesignRuntime{name, spec, SampleState{}});
            if (spec.initial_seed_count > 0) {
                auto events = seed_sample(spec, designs_.back().sample, world_,
                                          stream("design." + name));
                initial_selections_.insert(initial_selections_.end(), events.begin(),
                                           events.end());
            }
        }
    }

    // Resume from a snapshot. With restore_rng the stored stream states are
    // used and the run continues the original byte for byte; otherwise the
    // streams are reseeded from (base_seed, replicate), which is what paired
    // comparisons need. Designs present in the config but absent from the
    // snapshot start fresh and are seeded now.
    Simulation(const ScenarioConfig& cfg, std::uint64_t base_seed, int replicate,
               const Snapshot& snap, bool restore_rng)
        : cfg_(cfg) {
        init_streams(base_seed, replicate);
        treat_.spec = &cfg_.intervention;

        if (static_cast<int>(snap.world.groups.size()) != cfg_.space.n_groups)
            throw ConfigError("snapshot/config mismatch: group count differs");

        world_ = snap.world;
        epi_ = snap.epi;
        treat_.enrolled = snap.enrolled;
        treat_.sample = snap.treat_sample;

        std::map<std::string, const SampleState*> snap_designs;
        for (const auto& [name, sample] : snap.designs) snap_designs[name] = &sample;
        for (const auto& [name, spec] : cfg_.designs) {
            DesignRuntime rt{name, spec, SampleState{}};
            auto it = snap_designs.find(name);
            if (it != snap_designs.end()) {
                rt.sample = *it->second;
                snap_designs.erase(it);
                designs_.push_back(std::move(rt));
            } else {
                designs_.push_back(std::move(rt));
                if (spec.initial_seed_count > 0)
                    seed_sample(spec, designs_.back().sample, world_, stream("design." + name));
            }
        }
        if (!snap_designs.empty())
            throw ConfigError("snapshot/config mismatch: snapshot has design '" +
                              snap_designs.begin()->first + "' not present in the config");

        if (restore_rng) {
            for (const auto& [name, state] : snap.rng_states) {
                auto it = streams_.find(name);
                if (it != streams_.end()) it->second.restore(state);
            }
        }
    }

    StepRecord run_tick() {
        world_.now += 1;
        const Step now = world_.now;

        step_group_centers(world_.groups, cfg_.space, stream("space"));
        step_node_positions(world_, cfg_.space, stream("space"));

        RemovalHooks hooks;
        for (auto& d : designs_) hooks.samples.push_back(&d.sample);
        hooks.epi = &epi_;
        hooks.treat = &treat_;
        step_deaths(world_, cfg_.demography, &epi_, &cfg_.epi, &treat_, hooks,
                    stream("demography"));
        step_insertions(world_, cfg_.demography, cfg_.space, stream("demography"));

        step_dissolution(world_, now);
        step_formation(world_, cfg_.links, stream("links"), &treat_, cfg_.space.region_side);

        std::vector<InfectionEvent> infections =
            step_importation(world_, epi_, cfg_.epi, stream("epi"));
        auto transmitted = step_transmission(world_, epi_, cfg_.epi, &treat_, stream("epi"));
        infections.insert(infections.end(), transmitted.begin(), transmitted.end());
        step_progression(epi_, cfg_.epi, now, stream("epi"));

        if (cfg_.intervention.enabled && now >= cfg_.intervention.start_step) {
            RngStream& iv = stream("intervention");
            step_seek_and_treat(cfg_.intervention, treat_, world_, epi_, iv);
            step_dropout(cfg_.intervention, treat_, iv);
            step_cure(cfg_.intervention, treat_, epi_, now, iv);
        }

        StepRecord rec;
        rec.step = now;
        for (auto& d : designs_) {
            auto events = step_design(d.spec, d.sample, world_, stream("design." + d.name));
            DesignStepStats stats;
            stats.volume = static_cast<int>(volume(d.sample));
            stats.surface = static_cast<int>(surface(d.sample, world_));
            stats.selections = static_cast<int>(events.size());
            stats.events = std::move(events);
            rec.designs.emplace(d.name, std::move(stats));
        }

        rec.pop = static_cast<int>(world_.population());
        rec.mean_degree = world_.mean_degree();
        rec.prevalence = static_cast<int>(epi_.prevalence());
        rec.incidence = static_cast<int>(infections.size());
        const auto stages = epi_.stage_counts();
        rec.acute = stages.at(Stage::Acute);
        rec.chronic = stages.at(Stage::Chronic);
        rec.late = stages.at(Stage::Late);
        if (rec.prevalence > 0) {
            long total_out = 0;
            for (const auto& [id, mrec] : epi_.virus.members)
                total_out += degree_out_of_infected(world_, id, epi_);
            rec.infected_mean_degree_out =
                static_cast<double>(total_out) / static_cast<double>(rec.prevalence);
        }
        rec.infections = std::move(infections);
        for (const auto& [id, enr] : treat_.enrolled)
            (enr.known_positive ? rec.enrolled_positive : rec.enrolled_negative) += 1;
        return rec;
    }

    std::vector<StepRecord> run(Step n_ticks) {
        std::vector<StepRecord> records;
        records.reserve(static_cast<std::size_t>(n_ticks));
        for (Step t = 0; t < n_ticks; ++t) records.push_back(run_tick());
        return records;
    }

    Snapshot make_snapshot() const {
        Snapshot snap;
        snap.created_step = world_.now;
        snap.world = world_;
        snap.epi = epi_;
        snap.enrolled = treat_.enrolled;
        snap.treat_sample = treat_.sample;
        for (const auto& d : designs_) snap.designs.emplace_back(d.name, d.sample);
        for (const auto& [name, s] : streams_) snap.rng_states[name] = s.serialize();
        return snap;
    }

    const World& world() const { return world_; }
    World& world() { return world_; }
    const EpidemicState& epidemic() const { return epi_; }
    const TreatmentState& treatment() const { return treat_; }
    const std::vector<DesignRuntime>& designs() const { return designs_; }
    std::vector<DesignRuntime>& designs() { return designs_; }
    const ScenarioConfig& config() const { return cfg_; }
    RngStream& stream(const std::string& name) {
        auto it = streams_.find(name);
        if (it == streams_.end()) throw ContractError("unknown RNG stream: " + name);
        return it->second;
    }
    const std::vector<InfectionEvent>& initial_infections() const { return initial_infections_; }
    const std::vector<TraceEvent>& initial_selections() const { return initial_selections_; }

private:
    void init_streams(std::uint64_t base_seed, int replicate) {
        const auto rep = static_cast<std::uint64_t>(replicate);
        auto add = [&](const std::string& name) {
            streams_.emplace(name, RngStream::derive(base_seed, rep, name));
        };
        add("space");
        add("demography");
        add("links");
        add("epi");
        add("intervention");
        for (const auto& [name, spec] : cfg_.designs) add("design." + name);
    }

    ScenarioConfig cfg_;
    World world_;
    EpidemicState epi_;
    TreatmentState treat_;
    std::vector<DesignRuntime> designs_;
    std::map<std::string, RngStream> streams_;
    std::vector<InfectionEvent> initial_infections_;
    std::vector<TraceEvent> initial_selections_;
};

// ------------------------------------------------------------- replicate runs

struct ReplicateOutput {
    int replicate = 0;
    std::vector<StepRecord> records;
};

// Runs replicates 0..R-1, each on its own deterministically derived streams.
// Thread fan-out never changes results: replicate r's output depends only on
// (cfg, base_seed, r).
inline std::vector<ReplicateOutput> run_replicates(const ScenarioConfig& cfg, int replicates,
                                                   std::uint64_t base_seed,
                                                   unsigned threads = 0,
                                                   const Snapshot* resume = nullptr) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(replicates));

    std::vector<ReplicateOutput> out(static_cast<std::size_t>(replicates));
    std::vector<std::string> errors(static_cast<std::size_t>(replicates));
    auto work = [&](int r) {
        try {
            const bool restore_rng = resume && replicates == 1;
            Simulation sim = resume ? Simulation(cfg, base_seed, r, *resume, restore_rng)
                                    : Simulation(cfg, base_seed, r);
            out[static_cast<std::size_t>(r)] =
                ReplicateOutput{r, sim.run(cfg.run.steps)};
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(r)] = e.what();
        }
    };

    if (threads <= 1) {
        for (int r = 0; r < replicates; ++r) work(r);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t]() {
                for (int r = static_cast<int>(t); r < replicates; r += static_cast<int>(threads))
                    work(r);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (int r = 0; r < replicates; ++r)
        if (!errors[static_cast<std::size_t>(r)].empty())
            throw ContractError("replicate " + std::to_string(r) +
                                " failed: " + errors[static_cast<std::size_t>(r)]);
    return out;
}

// ------------------------------------------------------------------- summaries

struct SummaryRow {
    std::string scenario;
    int replicate = 0;
    std::vector<std::pair<std::string, double>> metrics;  // fixed order per config
};

inline std::vector<double> series_of(const std::vector<StepRecord>& records,
                                     double (*get)(const StepRecord&)) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(get(r));
    return v;
}

inline SummaryRow summarize_replicate(const ScenarioConfig& cfg, int replicate,
                                      const std::vector<StepRecord>& records) {
    const auto burn = static_cast<std::size_t>(std::min<Step>(
        cfg.run.burn_in, static_cast<Step>(records.empty() ? 0 : records.size() - 1)));
    auto tail_mean = [&](auto&& get) {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t i = burn; i < records.size(); ++i) {
            s += get(records[i]);
            ++n;
        }
        return n ? s / static_cast<double>(n) : 0.0;
    };
    auto tail_sd = [&](auto&& get) {
        std::vector<double> v;
        for (std::size_t i = burn; i < records.size(); ++i) v.push_back(get(records[i]));
        return sample_sd(v);
    };

    SummaryRow row;
    row.scenario = cfg.name;
    row.replicate = replicate;
    row.metrics.emplace_back("pop_mean", tail_mean([](const StepRecord& r) { return double(r.pop); }));
    row.metrics.emplace_back("pop_sd", tail_sd([](const StepRecord& r) { return double(r.pop); }));
    row.metrics.emplace_back("mean_degree_mean",
                             tail_mean([](const StepRecord& r) { return r.mean_degree; }));
    row.metrics.emplace_back("prevalence_mean",
                             tail_mean([](const StepRecord& r) { return double(r.prevalence); }));
    row.metrics.emplace_back("prevalence_sd",
                             tail_sd([](const StepRecord& r) { return double(r.prevalence); }));
    row.metrics.emplace_back("incidence_mean",
                             tail_mean([](const StepRecord& r) { return double(r.incidence); }));
    std::vector<double> incidence;
    for (std::size_t i = burn; i < records.size(); ++i)
        incidence.push_back(static_cast<double>(records[i].incidence));
    const auto disp = dispersion_index(incidence, 4);
    row.metrics.emplace_back("incidence_dispersion_w4", disp ? *disp : 0.0);
    row.metrics.emplace_back("enrolled_mean", tail_mean([](const StepRecord& r) {
                                 return double(r.enrolled_positive + r.enrolled_negative);
                             }));
    for (const auto& [name, spec] : cfg.designs) {
        auto dm = [&](auto&& get) {
            double s = 0.0;
            std::size_t n = 0;
            for (std::size_t i = burn; i < records.size(); ++i) {
                auto it = records[i].designs.find(name);
                if (it == records[i].designs.end()) continue;
                s += get(it->second);
                ++n;
            }
            return n ? s / static_cast<double>(n) : 0.0;
        };
        row.metrics.emplace_back("design_" + name + "_volume_mean",
                                 dm([](const DesignStepStats& d) { return double(d.volume); }));
        row.metrics.emplace_back("design_" + name + "_surface_mean",
                                 dm([](const DesignStepStats& d) { return double(d.surface); }));
        double total = 0.0;
        for (std::size_t i = burn; i < records.size(); ++i) {
            auto it = records[i].designs.find(name);
            if (it != records[i].designs.end()) total += it->second.selections;
        }
        row.metrics.emplace_back("design_" + name + "_selections_total", total);
    }
    return row;
}

// ---------------------------------------------------------------- file output

inline void write_jsonl(const std::vector<StepRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path);
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<StepRecord> read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read output file: " + path);
    std::vector<StepRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(step_record_from_json(json::parse(line)));
    }
    return records;
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path);
    out << "schema_version,scenario,replicate";
    if (!rows.empty())
        for (const auto& [key, v] : rows.front().metrics) out << ',' << key;
    out << '\n';
    for (const auto& row : rows) {
        out << kSchemaVersion << ',' << row.scenario << ',' << row.replicate;
        for (const auto& [key, v] : row.metrics) out << ',' << format_double(v);
        out << '\n';
    }
}

inline std::string jsonl_filename(const std::string& scenario, int replicate) {
    return "steps_" + scenario + "_" + std::to_string(replicate) + ".jsonl";
}

// Simulate entry point used by the CLI: runs replicates, writes one JSONL per
// replicate plus summary.csv, and optionally a snapshot of replicate 0's
// final state.
inline std::vector<ReplicateOutput> simulate_to_dir(const ScenarioConfig& cfg,
                                                    const std::string& out_dir,
                                                    unsigned threads = 0,
                                                    const Snapshot* resume = nullptr) {
    std::filesystem::create_directories(out_dir);
    auto outputs = run_replicates(cfg, cfg.run.replicates, cfg.run.seed, threads, resume);
    std::vector<SummaryRow> rows;
    for (const auto& rep : outputs) {
        write_jsonl(rep.records,
                    (std::filesystem::path(out_dir) / jsonl_filename(cfg.name, rep.replicate))
                        .string());
        rows.push_back(summarize_replicate(cfg, rep.replicate, rep.records));
    }
    write_summary_csv(rows, (std::filesystem::path(out_dir) / "summary.csv").string());
    return outputs;
}

// --------------------------------------------------------------- compare runs

struct CompareResult {
    std::vector<double> baseline_means;  // post-burn-in mean prevalence, per replicate
    std::vector<double> variant_means;
    int variant_lower_count = 0;
    // Per-step prevalence quantile bands at probs {0.05, 0.25, 0.5, 0.75, 0.95}.
    std::vector<std::vector<double>> baseline_bands;
    std::vector<std::vector<double>> variant_bands;
};

inline const std::vector<double>& compare_band_probs() {
    static const std::vector<double> probs{0.05, 0.25, 0.5, 0.75, 0.95};
    return probs;
}

// Both scenarios start every replicate from the same burn-in snapshot and the
// same post-burn-in stream seeds, so differences are attributable to the
// scenario delta alone.
inline CompareResult compare_scenarios(const ScenarioConfig& baseline,
                                       const ScenarioConfig& variant, const Snapshot& snap,
                                       int replicates, std::uint64_t seed,
                                       unsigned threads = 0,
                                       std::vector<ReplicateOutput>* baseline_out = nullptr,
                                       std::vector<ReplicateOutput>* variant_out = nullptr) {
    if (!model_layers_match(baseline, variant))
        throw ConfigError(
            "compare: baseline and variant configs differ outside the epidemic, "
            "intervention, and design layers");

    ScenarioConfig base_cfg = baseline;
    ScenarioConfig var_cfg = variant;
    base_cfg.run.replicates = replicates;
    var_cfg.run.replicates = replicates;
    base_cfg.run.seed = seed;
    var_cfg.run.seed = seed;

    auto base_runs = run_replicates(base_cfg, replicates, seed, threads, &snap);
    auto var_runs = run_replicates(var_cfg, replicates, seed, threads, &snap);

    CompareResult res;
    std::vector<std::vector<double>> base_paths, var_paths;
    const auto burn = static_cast<std::size_t>(base_cfg.run.burn_in);
    for (int r = 0; r < replicates; ++r) {
        auto prev = [](const StepRecord& rec) { return static_cast<double>(rec.prevalence); };
        std::vector<double> bp = series_of(base_runs[r].records, prev);
        std::vector<double> vp = series_of(var_runs[r].records, prev);
        const auto b = std::min(burn, bp.size());
        res.baseline_means.push_back(
            mean_of(std::vector<double>(bp.begin() + static_cast<std::ptrdiff_t>(b), bp.end())));
        res.variant_means.push_back(
            mean_of(std::vector<double>(vp.begin() + static_cast<std::ptrdiff_t>(b), vp.end())));
        if (res.variant_means.back() < res.baseline_means.back()) res.variant_lower_count += 1;
        base_paths.push_back(std::move(bp));
        var_paths.push_back(std::move(vp));
    }
    if (replicates >= 2) {
        res.baseline_bands = path_quantiles(base_paths, compare_band_probs());
        res.variant_bands = path_quantiles(var_paths, compare_band_probs());
    }
    if (baseline_out) *baseline_out = std::move(base_runs);
    if (variant_out) *variant_out = std::move(var_runs);
    return res;
}

inline void write_compare_csv(const CompareResult& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path);
    out << "schema_version,replicate,metric,value\n";
    for (std::size_t r = 0; r < res.baseline_means.size(); ++r) {
        out << kSchemaVersion << ',' << r << ",baseline_prevalence_mean,"
            << format_double(res.baseline_means[r]) << '\n';
        out << kSchemaVersion << ',' << r << ",variant_prevalence_mean,"
            << format_double(res.variant_means[r]) << '\n';
        out << kSchemaVersion << ',' << r << ",difference,"
            << format_double(res.variant_means[r] - res.baseline_means[r]) << '\n';
    }
    out << kSchemaVersion << ",,variant_lower_count," << res.variant_lower_count << '\n';
    out << kSchemaVersion << ",,replicates," << res.baseline_means.size() << '\n';
}

inline void write_compare_quantiles_csv(const CompareResult& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path);
    out << "schema_version,scenario,step";
    for (double p : compare_band_probs()) out << ",q" << format_double(p);
    out << '\n';
    auto dump = [&](const char* name, const std::vector<std::vector<double>>& bands) {
        if (bands.empty()) return;
        const std::size_t len = bands.front().size();
        for (std::size_t t = 0; t < len; ++t) {
            out << kSchemaVersion << ',' << name << ',' << (t + 1);
            for (const auto& band : bands) out << ',' << format_double(band[t]);
            out << '\n';
        }
    };
    dump("baseline", res.baseline_bands);
    dump("variant", res.variant_bands);
}

}  // namespace dynsamp
