#pragma once

// Sweep plans, trial enumeration, the line-oriented run store and the
// parallel trial runner.

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "distro_eval/experiment.hpp"
#include "distro_eval/hyperparams.hpp"
#include "distro_eval/rng.hpp"

namespace distro_eval {

using Json = nlohmann::ordered_json;

enum class SamplingMode { uniform, epsilon_ball, explicit_points };

struct SweepPlan {
    HyperParamSpace space;
    SamplingMode mode = SamplingMode::uniform;
    std::size_t n_points = 1;             ///< uniform and epsilon_ball modes
    HyperParamPoint center;               ///< epsilon_ball mode
    double epsilon = 0.0;                 ///< epsilon_ball mode, normalized units
    std::vector<HyperParamPoint> points;  ///< explicit mode
    std::size_t seeds_per_point = 1;
    std::uint64_t master_seed = 0;
};

struct TrialSpec {
    std::size_t trial_index = 0;
    HyperParamPoint point;
    std::uint64_t seed = 0;

    bool operator==(const TrialSpec&) const = default;
};

enum class TrialStatus { ok, failed };

struct TrialRecord {
    TrialSpec spec;
    std::optional<double> metric;  ///< present iff status is ok
    TrialStatus status = TrialStatus::ok;
    std::string message;  ///< failure message
    double wall_time = 0.0;

    bool ok() const noexcept { return status == TrialStatus::ok; }
    bool operator==(const TrialRecord&) const = default;
};

class StoreError : public std::runtime_error {
public:
    StoreError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class PlanMismatchError : public std::runtime_error {
public:
    explicit PlanMismatchError(const std::string& detail)
        : std::runtime_error("plan/store mismatch: " + detail)
    {
    }
};

// ---------------------------------------------------------------------------
// Validation and enumeration

inline void validate(const SweepPlan& plan)
{
    if (plan.seeds_per_point == 0) {
        throw std::invalid_argument("seeds_per_point must be >= 1");
    }
    switch (plan.mode) {
    case SamplingMode::uniform:
        if (plan.n_points == 0) {
            throw std::invalid_argument("n_points must be >= 1");
        }
        break;
    case SamplingMode::epsilon_ball:
        if (plan.n_points == 0) {
            throw std::invalid_argument("n_points must be >= 1");
        }
        if (!(plan.epsilon > 0.0 && plan.epsilon <= 1.0)) {
            throw std::invalid_argument("epsilon must lie in (0, 1]");
        }
        plan.space.validate(plan.center);
        break;
    case SamplingMode::explicit_points:
        if (plan.points.empty()) {
            throw std::invalid_argument("explicit plan needs at least one point");
        }
        for (const auto& p : plan.points) {
            plan.space.validate(p);
        }
        break;
    }
}

inline std::vector<HyperParamPoint> sample_points(const SweepPlan& plan)
{
    // Point sampling gets its own stream, decorrelated from trial seeds.
    Rng rng(splitmix64_mix(plan.master_seed ^ 0xD1B54A32D192ED03ULL));
    switch (plan.mode) {
    case SamplingMode::uniform:
        return sample_uniform(plan.space, plan.n_points, rng);
    case SamplingMode::epsilon_ball:
        return sample_epsilon_ball(plan.space, plan.center, plan.epsilon, plan.n_points, rng);
    case SamplingMode::explicit_points:
        return plan.points;
    }
    return {};
}

/// Points x seeds, trial_index = point_index * seeds_per_point + seed_slot.
inline std::vector<TrialSpec> enumerate_trials(const SweepPlan& plan)
{
    validate(plan);
    std::vector<TrialSpec> specs;
    const auto points = sample_points(plan);
    specs.reserve(points.size() * plan.seeds_per_point);
    for (const auto& point : points) {
        for (std::size_t s = 0; s < plan.seeds_per_point; ++s) {
            const std::size_t index = specs.size();
            specs.push_back({index, point, derive_trial_seed(plan.master_seed, index)});
        }
    }
    return specs;
}

// ---------------------------------------------------------------------------
// Serialization

inline const char* to_string(Scale s) { return s == Scale::log ? "log" : "linear"; }
inline const char* to_string(Kind k) { return k == Kind::integer ? "integer" : "continuous"; }

inline const char* to_string(SamplingMode m)
{
    switch (m) {
    case SamplingMode::uniform: return "uniform";
    case SamplingMode::epsilon_ball: return "epsilon_ball";
    case SamplingMode::explicit_points: return "explicit";
    }
    return "?";
}

inline SamplingMode parse_sampling_mode(const std::string& s)
{
    if (s == "uniform") return SamplingMode::uniform;
    if (s == "epsilon_ball") return SamplingMode::epsilon_ball;
    if (s == "explicit") return SamplingMode::explicit_points;
    throw std::invalid_argument("unknown sampling mode '" + s + "'");
}

inline Json to_json(const HyperParamPoint& p)
{
    Json j = Json::object();
    for (const auto& [k, v] : p.values) {
        j[k] = v;
    }
    return j;
}

inline HyperParamPoint point_from_json(const Json& j)
{
    if (!j.is_object()) {
        throw std::invalid_argument("hyperparameter point must be an object");
    }
    HyperParamPoint p;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) {
            throw std::invalid_argument("hyperparameter '" + k + "' must be numeric");
        }
        p.values[k] = v.get<double>();
    }
    return p;
}

inline Json to_json(const HyperParamSpace& space)
{
    Json dims = Json::array();
    for (const Dim& d : space.dims()) {
        dims.push_back(Json{{"name", d.name},
                            {"lo", d.lo},
                            {"hi", d.hi},
                            {"scale", to_string(d.scale)},
                            {"kind", to_string(d.kind)}});
    }
    return dims;
}

namespace detail {

/// Rejects keys outside `allowed`; typos would otherwise change a sweep silently.
inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) {
        throw std::invalid_argument(where + " must be an object");
    }
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            known = known || k == a;
        }
        if (!known) {
            throw std::invalid_argument("unknown key '" + k + "' in " + where);
        }
    }
}

}  // namespace detail

inline HyperParamSpace space_from_json(const Json& j)
{
    if (!j.is_array()) {
        throw std::invalid_argument("space must be an array of dimensions");
    }
    std::vector<Dim> dims;
    for (const Json& d : j) {
        detail::check_keys(d, {"name", "lo", "hi", "scale", "kind"}, "dimension");
        Dim dim;
        dim.name = d.at("name").get<std::string>();
        dim.lo = d.at("lo").get<double>();
        dim.hi = d.at("hi").get<double>();
        const std::string scale = d.value("scale", "linear");
        const std::string kind = d.value("kind", "continuous");
        if (scale != "linear" && scale != "log") {
            throw std::invalid_argument("unknown scale '" + scale + "'");
        }
        if (kind != "continuous" && kind != "integer") {
            throw std::invalid_argument("unknown kind '" + kind + "'");
        }
        dim.scale = scale == "log" ? Scale::log : Scale::linear;
        dim.kind = kind == "integer" ? Kind::integer : Kind::continuous;
        dims.push_back(std::move(dim));
    }
    return HyperParamSpace(std::move(dims));
}

inline Json to_json(const SweepPlan& plan)
{
    Json j;
    j["space"] = to_json(plan.space);
    j["mode"] = to_string(plan.mode);
    if (plan.mode != SamplingMode::explicit_points) {
        j["n_points"] = plan.n_points;
    }
    if (plan.mode == SamplingMode::epsilon_ball) {
        j["center"] = to_json(plan.center);
        j["epsilon"] = plan.epsilon;
    }
    if (plan.mode == SamplingMode::explicit_points) {
        Json pts = Json::array();
        for (const auto& p : plan.points) {
            pts.push_back(to_json(p));
        }
        j["points"] = std::move(pts);
    }
    j["seeds_per_point"] = plan.seeds_per_point;
    j["master_seed"] = plan.master_seed;
    return j;
}

inline std::uint64_t seed_from_json(const Json& j)
{
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        throw std::invalid_argument("seed must be a nonnegative integer");
    }
    return j.get<std::uint64_t>();
}

/// Reads plan fields from `j`; keys outside the plan are ignored here.
inline SweepPlan plan_from_json(const Json& j)
{
    SweepPlan plan;
    plan.space = space_from_json(j.at("space"));
    plan.mode = parse_sampling_mode(j.at("mode").get<std::string>());
    if (j.contains("n_points")) {
        const auto n = j.at("n_points").get<std::int64_t>();
        if (n < 0) {
            throw std::invalid_argument("n_points must be >= 1");
        }
        plan.n_points = static_cast<std::size_t>(n);
    }
    if (j.contains("center")) {
        plan.center = point_from_json(j.at("center"));
    }
    if (j.contains("epsilon")) {
        plan.epsilon = j.at("epsilon").get<double>();
    }
    if (j.contains("points")) {
        for (const Json& p : j.at("points")) {
            plan.points.push_back(point_from_json(p));
        }
    }
    if (j.contains("seeds_per_point")) {
        const auto s = j.at("seeds_per_point").get<std::int64_t>();
        plan.seeds_per_point = s < 0 ? 0 : static_cast<std::size_t>(s);
    }
    if (j.contains("master_seed")) {
        plan.master_seed = seed_from_json(j.at("master_seed"));
    }
    return plan;
}

inline Json to_json(const TrialRecord& r)
{
    Json j;
    j["trial_index"] = r.spec.trial_index;
    j["seed"] = r.spec.seed;
    j["point"] = to_json(r.spec.point);
    j["metric"] = r.metric ? Json(*r.metric) : Json(nullptr);
    j["status"] = r.ok() ? "ok" : "failed";
    if (!r.ok()) {
        j["message"] = r.message;
    }
    j["wall_time"] = r.wall_time;
    return j;
}

inline TrialRecord record_from_json(const Json& j)
{
    detail::check_keys(j, {"trial_index", "seed", "point", "metric", "status", "message", "wall_time"},
                       "record");
    TrialRecord r;
    r.spec.trial_index = j.at("trial_index").get<std::size_t>();
    r.spec.seed = seed_from_json(j.at("seed"));
    r.spec.point = point_from_json(j.at("point"));
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok") {
        r.status = TrialStatus::ok;
        const Json& m = j.at("metric");
        if (!m.is_number() || !std::isfinite(m.get<double>())) {
            throw std::invalid_argument("ok record needs a finite metric");
        }
        r.metric = m.get<double>();
    } else if (status == "failed") {
        r.status = TrialStatus::failed;
        if (!j.at("metric").is_null()) {
            throw std::invalid_argument("failed record must not carry a metric");
        }
        r.message = j.value("message", "");
    } else {
        throw std::invalid_argument("unknown status '" + status + "'");
    }
    r.wall_time = j.at("wall_time").get<double>();
    return r;
}

// ---------------------------------------------------------------------------
// Run store: line 1 is {"header": {...}}, then one record object per line.
// A record is committed once its trailing newline is written.

struct StoreHeader {
    std::string experiment;
    SweepPlan plan;
};

inline Json to_json(const StoreHeader& h)
{
    return Json{{"header", Json{{"experiment", h.experiment}, {"plan", to_json(h.plan)}}}};
}

struct StoreContents {
    std::optional<StoreHeader> header;
    std::vector<TrialRecord> records;
    Json raw_plan;  ///< plan exactly as stored, for mismatch checks
};

class RunStore {
public:
    explicit RunStore(std::filesystem::path path) : path_(std::move(path)) {}

    const std::filesystem::path& path() const noexcept { return path_; }

    bool empty() const
    {
        std::error_code ec;
        return !std::filesystem::exists(path_, ec) || std::filesystem::file_size(path_, ec) == 0;
    }

    void write_header(const StoreHeader& header)
    {
        if (!empty()) {
            throw StoreError("store '" + path_.string() + "' already has content");
        }
        append_line(to_json(header).dump());
    }

    void append(const TrialRecord& record) { append_line(to_json(record).dump()); }

    StoreContents load() const
    {
        std::ifstream in(path_, std::ios::binary);
        if (!in) {
            throw StoreError("cannot open store '" + path_.string() + "'");
        }
        StoreContents out;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (in.eof()) {
                throw StoreError("truncated record (no trailing newline)", lineno);
            }
            Json j;
            try {
                j = Json::parse(line);
            } catch (const std::exception& e) {
                throw StoreError(std::string("malformed record: ") + e.what(), lineno);
            }
            try {
                if (lineno == 1) {
                    const Json& h = j.at("header");
                    out.raw_plan = h.at("plan");
                    out.header = StoreHeader{h.at("experiment").get<std::string>(), plan_from_json(out.raw_plan)};
                } else {
                    out.records.push_back(record_from_json(j));
                }
            } catch (const std::exception& e) {
                throw StoreError(std::string("invalid record: ") + e.what(), lineno);
            }
        }
        if (in.bad()) {
            throw StoreError("read error on store '" + path_.string() + "'");
        }
        return out;
    }

private:
    void append_line(const std::string& line)
    {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        out << line << '\n';
        out.flush();
        if (!out) {
            throw StoreError("write failed on store '" + path_.string() + "'");
        }
    }

    std::filesystem::path path_;
};

inline std::vector<TrialRecord> load_records(const RunStore& store)
{
    if (store.empty()) {
        return {};
    }
    return store.load().records;
}

inline std::vector<TrialRecord> load_records(const std::filesystem::path& path)
{
    return load_records(RunStore(path));
}

// ---------------------------------------------------------------------------
// Execution

struct SweepProgress {
    std::size_t completed = 0;
    std::size_t total = 0;
    std::size_t failures = 0;
};

using ProgressFn = std::function<void(const SweepProgress&)>;

inline TrialRecord execute_trial(const Experiment& experiment, const TrialSpec& spec)
{
    TrialRecord rec;
    rec.spec = spec;
    const auto start = std::chrono::steady_clock::now();
    try {
        const double metric = experiment.run_trial(spec.point, spec.seed);
        if (std::isfinite(metric)) {
            rec.metric = metric;
        } else {
            rec.status = TrialStatus::failed;
            rec.message = "non-finite metric";
        }
    } catch (const std::exception& e) {
        rec.status = TrialStatus::failed;
        rec.message = e.what();
    } catch (...) {
        rec.status = TrialStatus::failed;
        rec.message = "unknown error";
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

/// Runs `specs` on up to worker_count threads. The calling thread is the only
/// store writer and appends records in the order of `specs`, so the store
/// bytes (wall_time aside) do not depend on scheduling. Returns the records
/// in the same order.
inline std::vector<TrialRecord> execute_trials(const std::vector<TrialSpec>& specs, const Experiment& experiment,
                                               std::size_t worker_count, RunStore* store,
                                               const ProgressFn& progress = {}, std::size_t prior_completed = 0,
                                               std::size_t prior_failures = 0, std::size_t total = 0)
{
    if (worker_count == 0) {
        throw std::invalid_argument("worker_count must be >= 1");
    }
    std::vector<TrialRecord> results(specs.size());
    if (specs.empty()) {
        return results;
    }
    SweepProgress state{prior_completed, total ? total : specs.size() + prior_completed, prior_failures};

    std::mutex mutex;
    std::condition_variable ready;
    std::deque<std::pair<std::size_t, TrialRecord>> finished;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) {
                return;
            }
            TrialRecord rec = execute_trial(experiment, specs[i]);
            {
                std::lock_guard lock(mutex);
                finished.emplace_back(i, std::move(rec));
            }
            ready.notify_one();
        }
    };

    // Declared after the shared state so the threads join before it dies.
    std::vector<std::jthread> threads;
    const std::size_t n_threads = std::min(worker_count, specs.size());
    for (std::size_t t = 0; t < n_threads; ++t) {
        threads.emplace_back(worker);
    }

    std::map<std::size_t, TrialRecord> pending;
    std::size_t flushed = 0;
    std::size_t received = 0;
    try {
        while (received < specs.size()) {
            std::unique_lock lock(mutex);
            ready.wait(lock, [&] { return !finished.empty(); });
            while (!finished.empty()) {
                pending.insert(std::move(finished.front()));
                finished.pop_front();
                ++received;
            }
            lock.unlock();
            for (auto it = pending.find(flushed); it != pending.end(); it = pending.find(flushed)) {
                if (store) {
                    store->append(it->second);
                }
                ++state.completed;
                state.failures += it->second.ok() ? 0 : 1;
                results[flushed] = std::move(it->second);
                pending.erase(it);
                ++flushed;
                if (progress) {
                    progress(state);
                }
            }
        }
    } catch (...) {
        stop.store(true);
        threads.clear();
        throw;
    }
    return results;
}

/// Fresh sweep into an empty (or absent) store.
inline std::vector<TrialRecord> run_sweep(const SweepPlan& plan, const Experiment& experiment,
                                          std::size_t worker_count, RunStore& store, const ProgressFn& progress = {})
{
    const auto specs = enumerate_trials(plan);
    store.write_header({experiment.name, plan});
    return execute_trials(specs, experiment, worker_count, &store, progress);
}

/// Sweep without persistence.
inline std::vector<TrialRecord> run_sweep(const SweepPlan& plan, const Experiment& experiment,
                                          std::size_t worker_count)
{
    return execute_trials(enumerate_trials(plan), experiment, worker_count, nullptr);
}

struct ResumeResult {
    std::vector<TrialRecord> records;  ///< merged, sorted by trial_index
    std::size_t executed = 0;
    std::size_t remaining_before = 0;
};

/// Runs only the trials missing from the store. An empty store behaves like
/// run_sweep.
inline ResumeResult resume_sweep(const SweepPlan& plan, const Experiment& experiment, RunStore& store,
                                 std::size_t worker_count, const ProgressFn& progress = {})
{
    const auto specs = enumerate_trials(plan);
    ResumeResult out;
    if (store.empty()) {
        out.remaining_before = specs.size();
        out.records = run_sweep(plan, experiment, worker_count, store, progress);
        out.executed = specs.size();
        return out;
    }
    StoreContents contents = store.load();
    if (!contents.header) {
        throw StoreError("store has no header");
    }
    if (contents.header->experiment != experiment.name) {
        throw PlanMismatchError("store experiment '" + contents.header->experiment + "' differs from '" +
                                experiment.name + "'");
    }
    if (contents.header->plan.master_seed != plan.master_seed) {
        throw PlanMismatchError("master_seed differs");
    }
    if (contents.raw_plan != to_json(plan)) {
        throw PlanMismatchError("stored plan differs from requested plan");
    }
    std::map<std::size_t, TrialRecord> done;
    for (auto& r : contents.records) {
        if (r.spec.trial_index >= specs.size() || !(r.spec == specs[r.spec.trial_index])) {
            throw PlanMismatchError("store holds trial " + std::to_string(r.spec.trial_index) +
                                    " that is not part of the plan");
        }
        if (!done.emplace(r.spec.trial_index, std::move(r)).second) {
            throw StoreError("duplicate trial_index in store");
        }
    }
    std::vector<TrialSpec> missing;
    std::size_t prior_failures = 0;
    for (const auto& [i, r] : done) {
        prior_failures += r.ok() ? 0 : 1;
    }
    for (const auto& s : specs) {
        if (!done.count(s.trial_index)) {
            missing.push_back(s);
        }
    }
    out.remaining_before = missing.size();
    auto fresh = execute_trials(missing, experiment, worker_count, &store, progress, done.size(), prior_failures,
                                specs.size());
    out.executed = fresh.size();
    for (auto& r : fresh) {
        done.emplace(r.spec.trial_index, std::move(r));
    }
    out.records.reserve(done.size());
    for (auto& [i, r] : done) {
        out.records.push_back(std::move(r));
    }
    return out;
}

inline std::vector<double> ok_metrics(const std::vector<TrialRecord>& records)
{
    std::vector<double> out;
    for (const auto& r : records) {
        if (r.ok()) {
            out.push_back(*r.metric);
        }
    }
    return out;
}

}  // namespace distro_eval
