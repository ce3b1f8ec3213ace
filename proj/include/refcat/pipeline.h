#pragma once

#include "refcat/io.h"
#include "refcat/mapreduce.h"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace refcat::pipeline {

// Task-DAG orchestration: stages declare their dependencies, outputs are
// cached under content fingerprints, and a run touches only stale stages.
// Fingerprints hash (task name, params, dependency fingerprints, external
// input file contents), so a parameter or input change replans the task and
// everything downstream; timestamps play no part.

struct Config {
    std::map<std::string, std::string> values;

    static Config load(const std::filesystem::path& file); // key = value lines
    static Config from_values(std::map<std::string, std::string> values);

    std::string get(const std::string& key, const std::string& fallback = "") const;
    int64_t get_int(const std::string& key, int64_t fallback) const;

    // Well-known keys with defaults; REFGRAPH_TMP_DIR and REFGRAPH_WORKERS
    // env vars override the file.
    std::filesystem::path out_dir() const;
    std::filesystem::path tmp_dir() const;
    Codec codec() const;              // key: codec (none|gzip), default gzip
    size_t memory_budget() const;     // key: memory_budget_mb, default 1024
    int parallelism() const;          // key: parallelism (per-stage sort/verify)
    int workers() const;              // key: workers (concurrent tasks)
    uint64_t group_cap() const;       // key: group_cap, default 10000
    mr::SortSpec sort_spec(const std::string& tag) const;
};

struct TaskContext {
    const Config* config = nullptr;
    std::vector<std::filesystem::path> inputs; // dependency outputs, then external files
    std::filesystem::path output_tmp;          // write here; renamed on success
    std::map<std::string, uint64_t>* counters = nullptr;

    void count(const std::string& key, uint64_t value) const { (*counters)[key] += value; }
};

using TaskFn = std::function<void(const TaskContext&)>;

struct TaskReport {
    std::string name;
    std::filesystem::path output;
    double wall_seconds = 0;
    uint64_t input_bytes = 0;
    uint64_t output_bytes = 0;
    std::map<std::string, uint64_t> counters;
    bool ok = false;
    bool skipped_failed_upstream = false;
};

class TaskGraph {
public:
    void add_task(std::string name, std::vector<std::string> deps,
                  std::vector<std::filesystem::path> external_inputs,
                  std::map<std::string, std::string> params, std::string output_suffix,
                  TaskFn fn);

    void set_output_dir(std::filesystem::path dir) { out_dir_ = std::move(dir); }

    bool has_task(const std::string& name) const { return tasks_.count(name) > 0; }
    std::vector<std::string> task_names() const;

    // Deterministic content fingerprint (12 hex chars).
    std::string fingerprint(const std::string& name) const;
    std::filesystem::path output_path(const std::string& name) const;
    bool is_fresh(const std::string& name) const;

    // Topological order of stale tasks only; empty when everything is fresh.
    // Throws on unknown tasks and dependency cycles.
    std::vector<std::string> plan(const std::string& target) const;

    struct RunResult {
        bool ok = true;
        std::vector<TaskReport> reports;
    };
    RunResult run(const std::string& target, int workers = 1);

private:
    struct Task {
        std::string name;
        std::vector<std::string> deps;
        std::vector<std::filesystem::path> external_inputs;
        std::map<std::string, std::string> params;
        std::string output_suffix;
        TaskFn fn;
    };

    const Task& get(const std::string& name) const;
    std::string fingerprint_impl(const std::string& name,
                                 std::map<std::string, std::string>& memo) const;
    void check_cycles(const std::string& target) const;

    std::map<std::string, Task> tasks_;
    std::filesystem::path out_dir_ = ".";
};

// The citation-graph derivation DAG (ingest, exact join, fuzzy verify,
// fusion, stats, plus extension targets when their inputs are configured).
TaskGraph build_derivation_graph(const Config& config);

void write_run_report(const TaskGraph::RunResult& result, LineSink& out);

} // namespace refcat::pipeline
