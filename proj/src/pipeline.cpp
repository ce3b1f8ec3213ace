#include "refcat/pipeline.h"

#include "refcat/exactmatch.h"
#include "refcat/extensions.h"
#include "refcat/fuse.h"
#include "refcat/fuzzy.h"
#include "refcat/hash.h"
#include "refcat/ingest.h"
#include "refcat/records.h"
#include "refcat/tsv.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <stdexcept>
#include <thread>

namespace refcat::pipeline {

Config Config::load(const std::filesystem::path& file) {
    Config cfg;
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read config: " + file.string());
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim_str = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        };
        trim_str(key);
        trim_str(value);
        if (!key.empty()) cfg.values[key] = value;
    }
    return cfg;
}

Config Config::from_values(std::map<std::string, std::string> values) {
    Config cfg;
    cfg.values = std::move(values);
    return cfg;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
    auto it = values.find(key);
    if (it == values.end() || it->second.empty()) return fallback;
    return std::stoll(it->second);
}

std::filesystem::path Config::out_dir() const {
    return get("out_dir", "refgraph-out");
}

std::filesystem::path Config::tmp_dir() const {
    if (const char* env = std::getenv("REFGRAPH_TMP_DIR"); env && *env) return env;
    auto v = get("tmp_dir");
    return v.empty() ? out_dir() / "tmp" : std::filesystem::path(v);
}

Codec Config::codec() const {
    return codec_from_string(get("codec", "gzip"));
}

size_t Config::memory_budget() const {
    return static_cast<size_t>(get_int("memory_budget_mb", 1024)) << 20;
}

int Config::parallelism() const {
    auto v = get_int("parallelism", 0);
    if (v > 0) return static_cast<int>(v);
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int Config::workers() const {
    if (const char* env = std::getenv("REFGRAPH_WORKERS"); env && *env)
        return std::max(1, std::atoi(env));
    return static_cast<int>(get_int("workers", 1));
}

uint64_t Config::group_cap() const {
    return static_cast<uint64_t>(get_int("group_cap", 10000));
}

mr::SortSpec Config::sort_spec(const std::string& tag) const {
    mr::SortSpec spec;
    spec.memory_budget = memory_budget();
    spec.tmp_dir = tmp_dir();
    spec.parallelism = parallelism();
    spec.stable = true;
    spec.codec = codec();
    spec.tag = tag;
    return spec;
}

void TaskGraph::add_task(std::string name, std::vector<std::string> deps,
                         std::vector<std::filesystem::path> external_inputs,
                         std::map<std::string, std::string> params, std::string output_suffix,
                         TaskFn fn) {
    Task task{name, std::move(deps), std::move(external_inputs), std::move(params),
              std::move(output_suffix), std::move(fn)};
    tasks_[task.name] = std::move(task);
}

std::vector<std::string> TaskGraph::task_names() const {
    std::vector<std::string> names;
    names.reserve(tasks_.size());
    for (const auto& [name, _] : tasks_) names.push_back(name);
    return names;
}

const TaskGraph::Task& TaskGraph::get(const std::string& name) const {
    auto it = tasks_.find(name);
    if (it == tasks_.end()) throw std::invalid_argument("unknown task: " + name);
    return it->second;
}

std::string TaskGraph::fingerprint_impl(const std::string& name,
                                        std::map<std::string, std::string>& memo) const {
    if (auto it = memo.find(name); it != memo.end()) return it->second;
    const Task& task = get(name);
    std::string material = "task:" + task.name + "\n";
    for (const auto& [k, v] : task.params) material += "param:" + k + "=" + v + "\n";
    for (const auto& dep : task.deps)
        material += "dep:" + dep + ":" + fingerprint_impl(dep, memo) + "\n";
    for (const auto& input : task.external_inputs) {
        std::string digest = std::filesystem::exists(input) ? sha256_file_hex(input) : "missing";
        material += "input:" + input.filename().string() + ":" + digest + "\n";
    }
    std::string fp = sha256_hex(material).substr(0, 12);
    memo[name] = fp;
    return fp;
}

std::string TaskGraph::fingerprint(const std::string& name) const {
    std::map<std::string, std::string> memo;
    return fingerprint_impl(name, memo);
}

std::filesystem::path TaskGraph::output_path(const std::string& name) const {
    const Task& task = get(name);
    return out_dir_ / (name + "-" + fingerprint(name) + task.output_suffix);
}

bool TaskGraph::is_fresh(const std::string& name) const {
    return std::filesystem::exists(output_path(name));
}

void TaskGraph::check_cycles(const std::string& target) const {
    std::map<std::string, int> color; // 0 new, 1 visiting, 2 done
    std::function<void(const std::string&)> dfs = [&](const std::string& name) {
        int& c = color[name];
        if (c == 1) throw std::runtime_error("dependency cycle through task: " + name);
        if (c == 2) return;
        c = 1;
        for (const auto& dep : get(name).deps) dfs(dep);
        c = 2;
    };
    dfs(target);
}

std::vector<std::string> TaskGraph::plan(const std::string& target) const {
    check_cycles(target);
    std::map<std::string, std::string> memo;
    std::vector<std::string> order;
    std::set<std::string> seen;
    std::function<bool(const std::string&)> visit = [&](const std::string& name) -> bool {
        const Task& task = get(name);
        for (const auto& dep : task.deps) visit(dep);
        // A missing-but-planned dependency does not invalidate this task's
        // fingerprint: the dep will regenerate identical content, so a
        // task is stale exactly when its own fingerprinted output is gone.
        bool stale = !std::filesystem::exists(out_dir_ /
                                              (name + "-" + fingerprint_impl(name, memo) +
                                               task.output_suffix));
        if (stale && !seen.count(name)) {
            order.push_back(name);
            seen.insert(name);
        }
        return stale;
    };
    visit(target);
    return order;
}

TaskGraph::RunResult TaskGraph::run(const std::string& target, int workers) {
    RunResult result;
    auto order = plan(target);
    if (order.empty()) return result;

    std::filesystem::create_directories(out_dir_);
    std::set<std::string> failed_or_skipped;

    // Tasks execute in plan order; independent ready tasks share a wave when
    // workers > 1. A failure skips everything downstream of it.
    std::set<std::string> pending(order.begin(), order.end());

    while (!pending.empty()) {
        std::vector<std::string> ready;
        for (const auto& name : order) {
            if (!pending.count(name)) continue;
            const Task& task = get(name);
            bool deps_ok = true, deps_failed = false;
            for (const auto& dep : task.deps) {
                if (failed_or_skipped.count(dep)) deps_failed = true;
                if (pending.count(dep)) deps_ok = false;
            }
            if (deps_failed) {
                TaskReport report;
                report.name = name;
                report.skipped_failed_upstream = true;
                result.reports.push_back(report);
                failed_or_skipped.insert(name);
                pending.erase(name);
                result.ok = false;
                ready.clear();
                break; // restart scan; pending changed
            }
            if (deps_ok) ready.push_back(name);
            if (static_cast<int>(ready.size()) >= std::max(1, workers)) break;
        }
        if (ready.empty()) continue;

        std::vector<TaskReport> wave(ready.size());
        auto run_one = [&](size_t i) {
            const std::string& name = ready[i];
            const Task& task = get(name);
            TaskReport& report = wave[i];
            report.name = name;
            auto final_path = output_path(name);
            // The tmp file keeps the final name's codec extension so sinks
            // pick the right compression.
            auto tmp_path = final_path.parent_path() /
                            (".part." + final_path.filename().string());

            TaskContext ctx;
            ctx.config = nullptr; // tasks capture what they need
            for (const auto& dep : task.deps) ctx.inputs.push_back(output_path(dep));
            for (const auto& ext : task.external_inputs) ctx.inputs.push_back(ext);
            ctx.output_tmp = tmp_path;
            ctx.counters = &report.counters;

            for (const auto& in : ctx.inputs) report.input_bytes += file_size_or_zero(in);
            auto start = std::chrono::steady_clock::now();
            try {
                task.fn(ctx);
                std::filesystem::rename(tmp_path, final_path);
                report.ok = true;
                report.output = final_path;
                report.output_bytes = file_size_or_zero(final_path);
            } catch (const std::exception& e) {
                std::error_code ec;
                std::filesystem::remove(tmp_path, ec);
                report.ok = false;
                report.counters["error"] = 1;
                report.output = final_path;
            }
            report.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        };

        if (ready.size() == 1) {
            run_one(0);
        } else {
            std::vector<std::thread> pool;
            for (size_t i = 0; i < ready.size(); ++i) pool.emplace_back(run_one, i);
            for (auto& t : pool) t.join();
        }

        for (size_t i = 0; i < ready.size(); ++i) {
            pending.erase(ready[i]);
            if (!wave[i].ok) {
                failed_or_skipped.insert(ready[i]);
                result.ok = false;
            }
            result.reports.push_back(wave[i]);
        }
    }
    return result;
}

void write_run_report(const TaskGraph::RunResult& result, LineSink& out) {
    out.write("task\tstatus\twall_s\tin_bytes\tout_bytes\tcounters");
    for (const auto& r : result.reports) {
        std::string counters;
        for (const auto& [k, v] : r.counters) {
            if (!counters.empty()) counters += ',';
            counters += k + "=" + std::to_string(v);
        }
        char wall[32];
        snprintf(wall, sizeof wall, "%.3f", r.wall_seconds);
        std::string status = r.ok ? "ok" : (r.skipped_failed_upstream ? "skipped" : "failed");
        out.write(r.name + "\t" + status + "\t" + wall + "\t" + std::to_string(r.input_bytes) +
                  "\t" + std::to_string(r.output_bytes) + "\t" + counters);
    }
}

namespace {

// Key-extraction stages write several keyed lines per record.
void write_docs(const std::vector<KeyedDoc>& docs, LineSink& out) {
    for (const auto& doc : docs) out.write(doc.to_line());
}

} // namespace

TaskGraph build_derivation_graph(const Config& config) {
    // Tasks run long after this function returns; they share one config copy.
    auto cfg = std::make_shared<const Config>(config);
    TaskGraph graph;
    graph.set_output_dir(cfg->out_dir());

    const std::string codec_ext = extension_for(cfg->codec());
    const std::string data_suffix = ".ndjson" + codec_ext;
    const std::string tsv_suffix = ".tsv" + codec_ext;
    std::map<std::string, std::string> engine_params = {
        {"memory_budget_mb", std::to_string(cfg->memory_budget() >> 20)},
        {"group_cap", std::to_string(cfg->group_cap())},
        {"codec", to_string(cfg->codec())},
    };

    auto releases_input = std::filesystem::path(cfg->get("releases"));
    auto refs_input = std::filesystem::path(cfg->get("refs"));

    graph.add_task(
        "releases_ingested", {}, {releases_input}, {}, data_suffix,
        [releases_input](const TaskContext& ctx) {
            auto in = open_line_source(releases_input);
            auto out = open_line_sink(ctx.output_tmp);
            auto stats = ingest_releases(*in, *out);
            out->close();
            ctx.count("accepted", stats.accepted);
            ctx.count("rejected", stats.rejected);
        });

    graph.add_task(
        "refs_ingested", {}, {refs_input}, {}, data_suffix,
        [refs_input](const TaskContext& ctx) {
            auto in = open_line_source(refs_input);
            auto out = open_line_sink(ctx.output_tmp);
            auto stats = ingest_references(*in, *out);
            out->close();
            ctx.count("accepted", stats.accepted);
            ctx.count("rejected", stats.rejected);
        });

    graph.add_task(
        "exact_keys_release", {"releases_ingested"}, {}, {}, tsv_suffix,
        [](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            std::string line;
            uint64_t keyless = 0;
            while (in->next(line)) {
                auto docs = extract_release_keys(release_from_json_line(line));
                if (docs.empty()) ++keyless;
                write_docs(docs, *out);
            }
            out->close();
            ctx.count("keyless", keyless);
        });

    graph.add_task(
        "exact_keys_ref", {"refs_ingested"}, {}, {}, tsv_suffix,
        [](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            std::string line;
            uint64_t keyless = 0;
            while (in->next(line)) {
                auto docs = extract_ref_keys(raw_reference_from_json_line(line));
                if (docs.empty()) ++keyless;
                write_docs(docs, *out);
            }
            out->close();
            ctx.count("keyless", keyless);
        });

    auto add_sort_task = [&graph, cfg, engine_params](const std::string& name,
                                                           std::vector<std::string> deps,
                                                           const std::string& suffix) {
        graph.add_task(name, std::move(deps), {}, engine_params, suffix,
                       [cfg, name](const TaskContext& ctx) {
                           auto in = open_cat_source(ctx.inputs);
                           auto out = open_line_sink(ctx.output_tmp);
                           auto spec = cfg->sort_spec(name);
                           spec.tmp_dir = cfg->tmp_dir() / name;
                           auto metrics = mr::external_sort(*in, *out, spec);
                           out->close();
                           ctx.count("lines", metrics.lines);
                           ctx.count("runs", metrics.runs);
                       });
    };

    add_sort_task("exact_sorted", {"exact_keys_release", "exact_keys_ref"}, tsv_suffix);

    graph.add_task(
        "exact_edges", {"exact_sorted"}, {}, engine_params, data_suffix,
        [cfg](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            JoinStats stats;
            auto reducer = make_exact_join_reducer(stats, cfg->group_cap());
            auto group_stats =
                mr::group_reduce_parallel(*in, reducer, *out, cfg->parallelism());
            out->close();
            ctx.count("groups", group_stats.groups);
            ctx.count("edges", stats.edges.load());
            ctx.count("hot_groups", stats.hot_groups.load());
        });

    graph.add_task(
        "fuzzy_keys_release", {"releases_ingested"}, {}, {}, tsv_suffix,
        [](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            std::string line;
            uint64_t keyless = 0;
            while (in->next(line)) {
                ReleaseRecord rec = release_from_json_line(line);
                auto slug = fuzzy::candidate_key(rec);
                if (!slug) {
                    ++keyless;
                    continue;
                }
                KeyedDoc doc{*slug, DocSide::Release, line};
                out->write(doc.to_line());
            }
            out->close();
            ctx.count("keyless", keyless);
        });

    graph.add_task(
        "fuzzy_keys_ref", {"refs_ingested"}, {}, {}, tsv_suffix,
        [](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            std::string line;
            uint64_t keyless = 0;
            while (in->next(line)) {
                RawReference ref = raw_reference_from_json_line(line);
                // Only identifier-less references take the fuzzy route.
                if (!extract_ref_keys(ref).empty()) continue;
                auto slug = fuzzy::candidate_key(fuzzy::to_pseudo_release(ref));
                if (!slug) {
                    ++keyless;
                    continue;
                }
                KeyedDoc doc{*slug, DocSide::Ref, line};
                out->write(doc.to_line());
            }
            out->close();
            ctx.count("keyless", keyless);
        });

    add_sort_task("fuzzy_sorted", {"fuzzy_keys_release", "fuzzy_keys_ref"}, tsv_suffix);

    graph.add_task(
        "fuzzy_edges", {"fuzzy_sorted"}, {}, engine_params, data_suffix,
        [cfg](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            fuzzy::MatchGroupStats stats;
            auto reducer = fuzzy::make_fuzzy_match_reducer(stats, fuzzy::default_verify_config(),
                                                           cfg->group_cap());
            auto group_stats =
                mr::group_reduce_parallel(*in, reducer, *out, cfg->parallelism());
            out->close();
            ctx.count("groups", group_stats.groups);
            ctx.count("edges", stats.edges.load());
            ctx.count("hot_groups", stats.hot_groups.load());
            ctx.count("pairs_verified", stats.pairs_verified.load());
        });

    graph.add_task(
        "unmatched_brefs", {"refs_ingested"}, {}, {}, data_suffix,
        [](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            std::string line;
            uint64_t count = 0;
            while (in->next(line)) {
                out->write(to_json_line(unmatched_placeholder(raw_reference_from_json_line(line))));
                ++count;
            }
            out->close();
            ctx.count("placeholders", count);
        });

    graph.add_task(
        "bref_keys", {"exact_edges", "fuzzy_edges", "unmatched_brefs"}, {}, {}, tsv_suffix,
        [](const TaskContext& ctx) {
            auto in = open_cat_source(ctx.inputs);
            auto out = open_line_sink(ctx.output_tmp);
            auto stats = mr::map_to_tsv(
                *in,
                [](std::string_view record) -> std::optional<std::string> {
                    return bref_from_json_line(record).edge_key();
                },
                *out);
            out->close();
            ctx.count("lines", stats.lines_out);
        });

    add_sort_task("bref_sorted", {"bref_keys"}, tsv_suffix);

    graph.add_task(
        "bref", {"bref_sorted"}, {}, engine_params, data_suffix,
        [cfg](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto out = open_line_sink(ctx.output_tmp);
            auto group_stats =
                mr::group_reduce_parallel(*in, make_fuse_reducer(), *out, cfg->parallelism());
            out->close();
            ctx.count("edges", group_stats.groups);
        });

    graph.add_task(
        "stats", {"bref"}, {}, {}, ".tsv",
        [](const TaskContext& ctx) {
            auto in = open_line_source(ctx.inputs[0]);
            auto rows = match_stats(*in);
            auto out = open_line_sink(ctx.output_tmp);
            write_stats_tsv(rows, *out);
            out->close();
            ctx.count("rows", rows.size());
        });

    // Extension targets, registered when their inputs are configured.
    auto wikipedia_input = cfg->get("wikipedia");
    if (!wikipedia_input.empty()) {
        graph.add_task(
            "wikipedia_ingested", {}, {wikipedia_input}, {}, data_suffix,
            [wikipedia_input](const TaskContext& ctx) {
                auto in = open_line_source(wikipedia_input);
                auto out = open_line_sink(ctx.output_tmp);
                auto stats = ingest_wikipedia_rows(*in, *out);
                out->close();
                ctx.count("accepted", stats.accepted);
                ctx.count("rejected", stats.rejected);
            });
        graph.add_task(
            "wikipedia_edges", {"wikipedia_ingested", "releases_ingested"}, {}, engine_params,
            data_suffix, [cfg](const TaskContext& ctx) {
                auto rows = open_line_source(ctx.inputs[0]);
                auto releases = open_line_source(ctx.inputs[1]);
                auto out = open_line_sink(ctx.output_tmp);
                auto spec = cfg->sort_spec("wikipedia_edges");
                spec.tmp_dir = cfg->tmp_dir() / "wikipedia_edges";
                auto stats = ext::match_wikipedia(*rows, *releases, *out, spec,
                                                  fuzzy::default_verify_config(),
                                                  cfg->group_cap());
                out->close();
                ctx.count("rows", stats.rows);
                ctx.count("skipped", stats.skipped);
                ctx.count("edges", stats.fused_edges);
            });
    }

    auto openlibrary_input = cfg->get("openlibrary");
    if (!openlibrary_input.empty()) {
        graph.add_task(
            "openlibrary_edges", {"refs_ingested"}, {openlibrary_input}, engine_params,
            data_suffix, [cfg, openlibrary_input](const TaskContext& ctx) {
                auto refs = open_line_source(ctx.inputs[0]);
                auto editions = open_line_source(openlibrary_input);
                auto out = open_line_sink(ctx.output_tmp);
                auto spec = cfg->sort_spec("openlibrary_edges");
                spec.tmp_dir = cfg->tmp_dir() / "openlibrary_edges";
                auto stats = ext::match_openlibrary(*refs, *editions, *out, spec,
                                                    fuzzy::default_verify_config(),
                                                    cfg->group_cap());
                out->close();
                ctx.count("editions", stats.editions);
                ctx.count("raw_pairs", stats.raw_pairs);
                ctx.count("edges", stats.fused_edges);
            });
    }

    {
        std::vector<std::string> deps = {"bref", "releases_ingested"};
        if (graph.has_task("wikipedia_edges")) deps.push_back("wikipedia_edges");
        if (graph.has_task("openlibrary_edges")) deps.push_back("openlibrary_edges");
        graph.add_task(
            "edge_types", deps, {}, engine_params, ".tsv",
            [cfg, deps](const TaskContext& ctx) {
                auto bref = open_line_source(ctx.inputs[0]);
                auto releases = open_line_source(ctx.inputs[1]);
                std::unique_ptr<LineSource> wiki, ol;
                size_t next = 2;
                for (size_t i = 2; i < deps.size(); ++i, ++next) {
                    if (deps[i] == "wikipedia_edges") wiki = open_line_source(ctx.inputs[next]);
                    if (deps[i] == "openlibrary_edges") ol = open_line_source(ctx.inputs[next]);
                }
                auto spec = cfg->sort_spec("edge_types");
                spec.tmp_dir = cfg->tmp_dir() / "edge_types";
                auto counts =
                    ext::edge_type_report(*bref, *releases, wiki.get(), ol.get(), spec);
                auto out = open_line_sink(ctx.output_tmp);
                ext::write_edge_type_tsv(counts, *out);
                out->close();
                ctx.count("total", counts.total);
            });
    }

    return graph;
}

} // namespace refcat::pipeline
