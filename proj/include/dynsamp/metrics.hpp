// Sample-geometry and outcome statistics: volume/surface, equilibrium
// histograms, path quantile bands, dispersion (burstiness), degree-at-
// selection and degree-out-at-incidence comparisons, and the per-step record
// streamed to JSON Lines.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "dynsamp/epidemic.hpp"
#include "dynsamp/sampling.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

using json = nlohmann::json;

inline std::size_t volume(const SampleState& sample) { return sample.size(); }

inline std::size_t surface(const SampleState& sample, const World& world) {
    std::size_t n = 0;
    for (const auto& [id, rec] : sample.members) {
        if (!world.contains(id)) continue;
        for (NodeId nb : world.node(id).neighbors)
            if (!sample.contains(nb)) ++n;
    }
    return n;
}

// surface + 2 * internal links == sum of member degrees.
inline bool handshake_identity_holds(const SampleState& sample, const World& world) {
    std::size_t surf = 0, internal_twice = 0, degree_sum = 0;
    for (const auto& [id, rec] : sample.members) {
        if (!world.contains(id)) return false;
        for (NodeId nb : world.node(id).neighbors) {
            if (sample.contains(nb))
                ++internal_twice;
            else
                ++surf;
        }
        degree_sum += world.node(id).neighbors.size();
    }
    return surf + internal_twice == degree_sum;
}

// ---------------------------------------------------------------- statistics

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Linear interpolation between order statistics; the one quantile convention
// used everywhere in this project.
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double h = prob * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile_of(std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, prob);
}

struct EquilibriumSummary {
    double mean = 0.0;
    double sd = 0.0;
    std::map<double, double> quantiles;
    std::vector<long> histogram;
    double bin_lo = 0.0;
    double bin_width = 0.0;
};

// Histogram and summary statistics of a series after burn-in.
inline EquilibriumSummary equilibrium_histogram(const std::vector<double>& series,
                                                std::size_t burn_in, int bins,
                                                std::vector<double> probs = {0.05, 0.25, 0.5,
                                                                             0.75, 0.95}) {
    if (series.size() <= burn_in) throw ContractError("series shorter than burn-in");
    if (bins < 1) throw ContractError("equilibrium_histogram needs bins >= 1");
    std::vector<double> tail(series.begin() + static_cast<std::ptrdiff_t>(burn_in), series.end());

    EquilibriumSummary out;
    out.mean = mean_of(tail);
    out.sd = sample_sd(tail);
    std::vector<double> sorted = tail;
    std::sort(sorted.begin(), sorted.end());
    for (double p : probs) out.quantiles[p] = quantile_sorted(sorted, p);

    const double lo = sorted.front();
    const double hi = sorted.back();
    out.bin_lo = lo;
    out.histogram.assign(static_cast<std::size_t>(bins), 0);
    if (hi <= lo) {
        out.bin_width = 0.0;
        out.histogram[0] = static_cast<long>(tail.size());
        return out;
    }
    out.bin_width = (hi - lo) / bins;
    for (double x : tail) {
        auto b = static_cast<std::size_t>((x - lo) / out.bin_width);
        if (b >= static_cast<std::size_t>(bins)) b = static_cast<std::size_t>(bins) - 1;
        out.histogram[b] += 1;
    }
    return out;
}

// Per-step empirical quantiles across an ensemble of equal-length paths.
inline std::vector<std::vector<double>> path_quantiles(
    const std::vector<std::vector<double>>& ensemble, const std::vector<double>& probs) {
    if (ensemble.size() < 2) throw ContractError("path_quantiles needs >= 2 replicates");
    const std::size_t len = ensemble.front().size();
    for (const auto& path : ensemble)
        if (path.size() != len) throw ContractError("path_quantiles: mismatched lengths");

    std::vector<std::vector<double>> out(probs.size(), std::vector<double>(len, 0.0));
    std::vector<double> column(ensemble.size());
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t r = 0; r < ensemble.size(); ++r) column[r] = ensemble[r][t];
        std::sort(column.begin(), column.end());
        for (std::size_t p = 0; p < probs.size(); ++p)
            out[p][t] = quantile_sorted(column, probs[p]);
    }
    return out;
}

// Index of dispersion (variance/mean) of counts summed over nonoverlapping
// windows; missing when every window is zero.
inline std::optional<double> dispersion_index(const std::vector<double>& counts,
                                              std::size_t window) {
    if (window < 1) throw ContractError("dispersion_index needs window >= 1");
    std::vector<double> sums;
    for (std::size_t start = 0; start + window <= counts.size(); start += window) {
        double s = 0.0;
        for (std::size_t k = 0; k < window; ++k) s += counts[start + k];
        sums.push_back(s);
    }
    if (sums.empty()) return std::nullopt;
    const double m = mean_of(sums);
    if (m <= 0.0) return std::nullopt;
    double ss = 0.0;
    for (double x : sums) ss += (x - m) * (x - m);
    const double var = sums.size() > 1 ? ss / static_cast<double>(sums.size() - 1) : 0.0;
    return var / m;
}

inline std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ContractError("spearman: bad input");
    return pearson(ranks_with_ties(x), ranks_with_ties(y));
}

// Two-sided p-value of the OLS slope of y against 0..n-1. Callers feed block
// means when the series is autocorrelated.
inline double trend_pvalue(const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n < 3) return 1.0;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = y[i] - (intercept + slope * x[i]);
        sse += resid * resid;
    }
    const double dof = static_cast<double>(n - 2);
    const double se = std::sqrt(sse / dof / sxx);
    if (se <= 0.0) return slope == 0.0 ? 1.0 : 0.0;
    const double t = std::abs(slope / se);
    boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

inline std::vector<double> block_means(const std::vector<double>& v, std::size_t block) {
    std::vector<double> out;
    for (std::size_t start = 0; start + block <= v.size(); start += block) {
        double s = 0.0;
        for (std::size_t k = 0; k < block; ++k) s += v[start + k];
        out.push_back(s / static_cast<double>(block));
    }
    return out;
}

// ------------------------------------------------------------- event metrics

struct PairedMeans {
    double selected = 0.0;   // mean over events
    double reference = 0.0;  // mean of the contemporaneous population value
    std::size_t n_events = 0;
};

// Mean destination degree over traced selections vs the population mean
// degree at the matching steps.
inline std::optional<PairedMeans> selection_degree_stats(
    const std::vector<TraceEvent>& events, const std::map<Step, double>& pop_mean_degree) {
    PairedMeans out;
    double sel = 0.0, ref = 0.0;
    for (const TraceEvent& ev : events) {
        if (ev.mode != SelectionMode::Trace) continue;
        auto it = pop_mean_degree.find(ev.step);
        if (it == pop_mean_degree.end()) continue;
        sel += ev.dest_degree;
        ref += it->second;
        out.n_events += 1;
    }
    if (out.n_events == 0) return std::nullopt;
    out.selected = sel / static_cast<double>(out.n_events);
    out.reference = ref / static_cast<double>(out.n_events);
    return out;
}

// Mean degree-out-of-infected-set at incidence vs the contemporaneous mean
// degree-out over all infected nodes. Imported cases are excluded: they are
// random selections, not traced ones.
inline std::optional<PairedMeans> incidence_degree_out_stats(
    const std::vector<InfectionEvent>& events,
    const std::map<Step, double>& infected_mean_degree_out) {
    PairedMeans out;
    double sel = 0.0, ref = 0.0;
    for (const InfectionEvent& ev : events) {
        if (ev.imported) continue;
        auto it = infected_mean_degree_out.find(ev.step);
        if (it == infected_mean_degree_out.end()) continue;
        sel += ev.dest_degree_out;
        ref += it->second;
        out.n_events += 1;
    }
    if (out.n_events == 0) return std::nullopt;
    out.selected = sel / static_cast<double>(out.n_events);
    out.reference = ref / static_cast<double>(out.n_events);
    return out;
}

// Fraction of selections sharing the modal group, per consecutive window of
// k selections; missing when there are fewer than k events.
inline std::optional<std::vector<double>> same_group_fraction(const std::vector<GroupId>& groups,
                                                              std::size_t k) {
    if (k < 2) throw ContractError("same_group_fraction needs k >= 2");
    if (groups.size() < k) return std::nullopt;
    std::vector<double> out;
    for (std::size_t start = 0; start + k <= groups.size(); start += k) {
        std::map<GroupId, int> counts;
        for (std::size_t m = 0; m < k; ++m) counts[groups[start + m]] += 1;
        int modal = 0;
        for (const auto& [g, c] : counts) modal = std::max(modal, c);
        out.push_back(static_cast<double>(modal) / static_cast<double>(k));
    }
    return out;
}

// -------------------------------------------------------------- step records

struct DesignStepStats {
    int volume = 0;
    int surface = 0;
    int selections = 0;
    std::vector<TraceEvent> events;
};

struct StepRecord {
    Step step = 0;
    int pop = 0;
    double mean_degree = 0.0;
    std::map<std::string, DesignStepStats> designs;
    int prevalence = 0;
    int incidence = 0;
    int acute = 0;
    int chronic = 0;
    int late = 0;
    std::optional<double> infected_mean_degree_out;
    std::vector<InfectionEvent> infections;
    int enrolled_positive = 0;
    int enrolled_negative = 0;
};

inline json to_json(const TraceEvent& ev) {
    return json{{"mode", to_string(ev.mode)}, {"origin", ev.origin},
                {"dest", ev.dest},           {"deg", ev.dest_degree},
                {"deg_out", ev.dest_degree_out}, {"group", ev.dest_group}};
}

inline json to_json(const InfectionEvent& ev) {
    return json{{"origin", ev.origin},      {"dest", ev.dest},
                {"deg", ev.dest_degree},    {"deg_out", ev.dest_degree_out},
                {"group", ev.dest_group},   {"imported", ev.imported}};
}

inline json to_json(const StepRecord& r) {
    json designs = json::object();
    for (const auto& [name, d] : r.designs) {
        json events = json::array();
        for (const TraceEvent& ev : d.events) events.push_back(to_json(ev));
        designs[name] = json{{"volume", d.volume},
                             {"surface", d.surface},
                             {"selections", d.selections},
                             {"events", std::move(events)}};
    }
    json infections = json::array();
    for (const InfectionEvent& ev : r.infections) infections.push_back(to_json(ev));
    json epi{{"prevalence", r.prevalence},
             {"incidence", r.incidence},
             {"acute", r.acute},
             {"chronic", r.chronic},
             {"late", r.late},
             {"infections", std::move(infections)}};
    if (r.infected_mean_degree_out)
        epi["mean_deg_out"] = *r.infected_mean_degree_out;
    else
        epi["mean_deg_out"] = nullptr;
    return json{{"v", kSchemaVersion},
                {"step", r.step},
                {"pop", r.pop},
                {"mean_degree", r.mean_degree},
                {"designs", std::move(designs)},
                {"epi", std::move(epi)},
                {"intervention",
                 json{{"enrolled_pos", r.enrolled_positive},
                      {"enrolled_neg", r.enrolled_negative}}}};
}

inline SelectionMode selection_mode_from(const std::string& s) {
    if (s == "trace") return SelectionMode::Trace;
    if (s == "random") return SelectionMode::Random;
    return SelectionMode::Seed;
}

inline StepRecord step_record_from_json(const json& j) {
    StepRecord r;
    r.step = j.at("step").get<Step>();
    r.pop = j.at("pop").get<int>();
    r.mean_degree = j.at("mean_degree").get<double>();
    for (const auto& [name, d] : j.at("designs").items()) {
        DesignStepStats s;
        s.volume = d.at("volume").get<int>();
        s.surface = d.at("surface").get<int>();
        s.selections = d.at("selections").get<int>();
        for (const auto& e : d.at("events")) {
            TraceEvent ev;
            ev.step = r.step;
            ev.origin = e.at("origin").get<NodeId>();
            ev.dest = e.at("dest").get<NodeId>();
            ev.dest_degree = e.at("deg").get<int>();
            ev.dest_degree_out = e.at("deg_out").get<int>();
            ev.dest_group = e.at("group").get<GroupId>();
            ev.mode = selection_mode_from(e.at("mode").get<std::string>());
            s.events.push_back(ev);
        }
        r.designs[name] = std::move(s);
    }
    const json& epi = j.at("epi");
    r.prevalence = epi.at("prevalence").get<int>();
    r.incidence = epi.at("incidence").get<int>();
    r.acute = epi.at("acute").get<int>();
    r.chronic = epi.at("chronic").get<int>();
    r.late = epi.at("late").get<int>();
    if (!epi.at("mean_deg_out").is_null())
        r.infected_mean_degree_out = epi.at("mean_deg_out").get<double>();
    for (const auto& e : epi.at("infections")) {
        InfectionEvent ev;
        ev.step = r.step;
        ev.origin = e.at("origin").get<NodeId>();
        ev.dest = e.at("dest").get<NodeId>();
        ev.dest_degree = e.at("deg").get<int>();
        ev.dest_degree_out = e.at("deg_out").get<int>();
        ev.dest_group = e.at("group").get<GroupId>();
        ev.imported = e.at("imported").get<bool>();
        r.infections.push_back(ev);
    }
    const json& iv = j.at("intervention");
    r.enrolled_positive = iv.at("enrolled_pos").get<int>();
    r.enrolled_negative = iv.at("enrolled_neg").get<int>();
    return r;
}

}  // namespace dynsamp
