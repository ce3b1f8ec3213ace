#include "refcat/mapreduce.h"

#include "refcat/tsv.h"

#include <omp.h>

#include <algorithm>
#include <cassert>
#include <queue>
#include <stdexcept>

namespace refcat::mr {

void SortSpec::validate() const {
    if (memory_budget < kMinSortBudget)
        throw std::invalid_argument("sort memory budget below 64 MiB floor");
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    if (tmp_dir.empty()) throw std::invalid_argument("tmp_dir not set");
}

MapStats map_to_tsv(LineSource& records, const KeyFn& key_fn, LineSink& keyed_out,
                    LineSink* side_channel) {
    MapStats stats;
    std::string record;
    while (records.next(record)) {
        auto key = key_fn(record);
        if (!key) {
            ++stats.skipped;
            if (side_channel) side_channel->write(record);
            continue;
        }
        std::string line = tsv::escape(*key);
        line += '\t';
        line += tsv::escape(record);
        keyed_out.write(line);
        ++stats.lines_out;
    }
    return stats;
}

MapStats map_to_tsv_parallel(LineSource& records, const KeyFn& key_fn, LineSink& keyed_out,
                             LineSink* side_channel, int threads) {
    MapStats stats;
    constexpr size_t kBatch = 8192;
    std::vector<std::string> batch;
    std::vector<std::optional<std::string>> keys;
    batch.reserve(kBatch);
    std::string record;
    bool more = true;
    while (more) {
        batch.clear();
        while (batch.size() < kBatch && (more = records.next(record))) batch.push_back(record);
        if (batch.empty()) break;
        keys.assign(batch.size(), std::nullopt);
#pragma omp parallel for schedule(static) num_threads(threads)
        for (size_t i = 0; i < batch.size(); ++i) keys[i] = key_fn(batch[i]);
        for (size_t i = 0; i < batch.size(); ++i) {
            if (!keys[i]) {
                ++stats.skipped;
                if (side_channel) side_channel->write(batch[i]);
                continue;
            }
            std::string line = tsv::escape(*keys[i]);
            line += '\t';
            line += tsv::escape(batch[i]);
            keyed_out.write(line);
            ++stats.lines_out;
        }
    }
    return stats;
}

namespace detail {

bool line_less(std::string_view a, std::string_view b, bool stable) {
    std::string_view ka = tsv::key_of(a), kb = tsv::key_of(b);
    if (int c = ka.compare(kb); c != 0) return c < 0;
    return stable && a < b;
}

void sort_run_serial(std::vector<std::string>& lines, bool stable) {
    std::sort(lines.begin(), lines.end(),
              [stable](const std::string& a, const std::string& b) {
                  return line_less(a, b, stable);
              });
}

void sort_run_parallel(std::vector<std::string>& lines, bool stable, int threads) {
    if (threads <= 1 || lines.size() < 4096) {
        sort_run_serial(lines, stable);
        return;
    }
    // Slice-sort with OpenMP, then fold the sorted slices together with
    // inplace_merge. Same total order as the serial kernel.
    size_t n = lines.size();
    size_t slices = static_cast<size_t>(threads);
    std::vector<size_t> bounds(slices + 1);
    for (size_t s = 0; s <= slices; ++s) bounds[s] = n * s / slices;
    auto cmp = [stable](const std::string& a, const std::string& b) {
        return line_less(a, b, stable);
    };
#pragma omp parallel for schedule(static) num_threads(threads)
    for (size_t s = 0; s < slices; ++s)
        std::sort(lines.begin() + bounds[s], lines.begin() + bounds[s + 1], cmp);
    for (size_t width = 1; width < slices; width *= 2) {
        for (size_t s = 0; s + width <= slices; s += 2 * width) {
            size_t mid = bounds[s + width];
            size_t hi = bounds[std::min(s + 2 * width, slices)];
            std::inplace_merge(lines.begin() + bounds[s], lines.begin() + mid,
                               lines.begin() + hi, cmp);
        }
    }
}

namespace {

struct RunHead {
    std::string line;
    size_t run;
};

struct RunHeadGreater {
    bool stable;
    bool operator()(const RunHead& a, const RunHead& b) const {
        if (line_less(a.line, b.line, stable)) return false;
        if (line_less(b.line, a.line, stable)) return true;
        return a.run > b.run; // deterministic tie-break across runs
    }
};

} // namespace

void merge_runs(const std::vector<std::filesystem::path>& runs, LineSink& out, bool stable) {
    std::vector<std::unique_ptr<LineSource>> sources;
    sources.reserve(runs.size());
    for (const auto& p : runs) sources.push_back(open_line_source(p));

    std::priority_queue<RunHead, std::vector<RunHead>, RunHeadGreater> heap{
        RunHeadGreater{stable}};
    std::string line;
    for (size_t i = 0; i < sources.size(); ++i)
        if (sources[i]->next(line)) heap.push(RunHead{line, i});
    while (!heap.empty()) {
        RunHead head = heap.top();
        heap.pop();
        out.write(head.line);
        if (sources[head.run]->next(line)) heap.push(RunHead{std::move(line), head.run});
    }
}

SortMetrics sort_with_budget(LineSource& in, LineSink& out, const SortSpec& spec,
                             size_t budget_bytes) {
    SortMetrics metrics;
    std::vector<std::string> buffer;
    std::vector<std::filesystem::path> runs;
    size_t buffered = 0;
    std::filesystem::create_directories(spec.tmp_dir);

    auto sort_buffer = [&] {
        if (spec.parallelism > 1)
            sort_run_parallel(buffer, spec.stable, spec.parallelism);
        else
            sort_run_serial(buffer, spec.stable);
    };
    auto spill = [&] {
        sort_buffer();
        auto path = spec.tmp_dir / (spec.tag + ".run-" + std::to_string(runs.size()) +
                                    ".tsv" + extension_for(spec.codec));
        auto sink = open_line_sink(path);
        for (const auto& l : buffer) {
            sink->write(l);
            metrics.spilled_bytes += l.size() + 1;
        }
        sink->close();
        runs.push_back(path);
        buffer.clear();
        buffer.shrink_to_fit();
        buffered = 0;
    };

    std::string line;
    while (in.next(line)) {
        size_t charge = line.size() + detail::kPerLineOverhead;
        if (buffered + charge > budget_bytes && !buffer.empty()) spill();
        buffered += charge;
        metrics.peak_buffer_bytes = std::max(metrics.peak_buffer_bytes, buffered);
        buffer.push_back(line);
        ++metrics.lines;
    }

    if (runs.empty()) {
        sort_buffer();
        for (const auto& l : buffer) out.write(l);
        return metrics;
    }
    if (!buffer.empty()) spill();
    metrics.runs = runs.size();

    // Single merge pass; cap open files by merging in waves if needed.
    constexpr size_t kMaxOpenRuns = 64;
    while (runs.size() > kMaxOpenRuns) {
        std::vector<std::filesystem::path> wave(runs.begin(), runs.begin() + kMaxOpenRuns);
        auto merged = spec.tmp_dir / (spec.tag + ".merge-" + std::to_string(runs.size()) +
                                      ".tsv" + extension_for(spec.codec));
        auto sink = open_line_sink(merged);
        merge_runs(wave, *sink, spec.stable);
        sink->close();
        for (const auto& p : wave) std::filesystem::remove(p);
        runs.erase(runs.begin(), runs.begin() + kMaxOpenRuns);
        runs.insert(runs.begin(), merged);
    }
    merge_runs(runs, out, spec.stable);
    for (const auto& p : runs) std::filesystem::remove(p);
    return metrics;
}

} // namespace detail

SortMetrics external_sort(LineSource& in, LineSink& out, const SortSpec& spec) {
    spec.validate();
    return detail::sort_with_budget(in, out, spec, spec.memory_budget);
}

namespace {

// Cursor over the sorted stream for one contiguous key.
class StreamGroupCursor final : public GroupCursor {
public:
    StreamGroupCursor(LineSource& in, std::string first_line)
        : in_(in), line_(std::move(first_line)), key_(tsv::key_of(line_)) {}

    bool next(std::string_view& rest) override {
        if (done_) return false;
        if (first_) {
            first_ = false;
            rest = tsv::rest_of(line_);
            return true;
        }
        if (!in_.next(next_line_)) {
            done_ = true;
            exhausted_ = true;
            return false;
        }
        if (tsv::key_of(next_line_) != key_) {
            done_ = true;
            carry_ = true;
            return false;
        }
        line_ = next_line_;
        rest = tsv::rest_of(line_);
        ++extra_;
        return true;
    }

    // Drains the remainder of this group (after a reducer bailed early).
    void drain() {
        std::string_view rest;
        while (next(rest)) {
        }
    }

    std::string key() const { return std::string(key_); }
    bool has_carry() const { return carry_; }
    std::string take_carry() { return std::move(next_line_); }
    bool exhausted() const { return exhausted_; }
    uint64_t lines_seen() const { return 1 + extra_; }

private:
    LineSource& in_;
    std::string line_;
    std::string next_line_;
    std::string key_;
    bool first_ = true;
    bool done_ = false;
    bool carry_ = false;
    bool exhausted_ = false;
    uint64_t extra_ = 0;
};

} // namespace

GroupStats group_reduce(LineSource& sorted, const Reducer& fn, LineSink& out) {
    GroupStats stats;
    std::string line;
    if (!sorted.next(line)) return stats;
    bool have_line = true;
    while (have_line) {
        StreamGroupCursor cursor(sorted, std::move(line));
        std::string key = cursor.key();
        try {
            fn(key, cursor, out);
        } catch (const std::exception&) {
            ++stats.failed_groups;
        }
        cursor.drain();
        stats.lines += cursor.lines_seen();
        ++stats.groups;
        if (cursor.has_carry()) {
            line = cursor.take_carry();
        } else {
            have_line = false;
        }
    }
    return stats;
}

namespace {

class VectorGroupCursor final : public GroupCursor {
public:
    explicit VectorGroupCursor(const std::vector<std::string>& rests) : rests_(rests) {}
    bool next(std::string_view& rest) override {
        if (pos_ >= rests_.size()) return false;
        rest = rests_[pos_++];
        return true;
    }

private:
    const std::vector<std::string>& rests_;
    size_t pos_ = 0;
};

struct BufferedGroup {
    std::string key;
    std::vector<std::string> rests;
    size_t bytes = 0;
};

} // namespace

GroupStats group_reduce_parallel(LineSource& sorted, const Reducer& fn, LineSink& out,
                                 int threads, size_t batch_bytes) {
    GroupStats stats;
    std::string line;
    bool have_line = sorted.next(line);
    std::optional<BufferedGroup> pending;

    auto read_group = [&]() -> std::optional<BufferedGroup> {
        if (!have_line) return std::nullopt;
        BufferedGroup g;
        g.key = std::string(tsv::key_of(line));
        while (have_line && tsv::key_of(line) == g.key) {
            auto rest = tsv::rest_of(line);
            g.bytes += rest.size() + detail::kPerLineOverhead;
            g.rests.emplace_back(rest);
            have_line = sorted.next(line);
        }
        return g;
    };

    std::vector<BufferedGroup> batch;
    std::vector<std::string> outputs;
    size_t batch_fill = 0;
    auto flush_batch = [&] {
        if (batch.empty()) return;
        outputs.assign(batch.size(), {});
        std::vector<uint8_t> failed(batch.size(), 0);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (size_t i = 0; i < batch.size(); ++i) {
            VectorLineSink group_out;
            VectorGroupCursor cursor(batch[i].rests);
            try {
                fn(batch[i].key, cursor, group_out);
                std::string joined;
                for (const auto& l : group_out.lines) {
                    joined += l;
                    joined += '\n';
                }
                outputs[i] = std::move(joined);
            } catch (const std::exception&) {
                failed[i] = 1;
            }
        }
        for (size_t i = 0; i < batch.size(); ++i) {
            if (failed[i]) {
                ++stats.failed_groups;
                continue;
            }
            std::string_view joined = outputs[i];
            size_t start = 0;
            while (start < joined.size()) {
                auto nl = joined.find('\n', start);
                out.write(joined.substr(start, nl - start));
                start = nl + 1;
            }
        }
        batch.clear();
        batch_fill = 0;
    };

    while (auto g = read_group()) {
        stats.lines += g->rests.size();
        ++stats.groups;
        batch_fill += g->bytes;
        batch.push_back(std::move(*g));
        if (batch_fill >= batch_bytes) flush_batch();
    }
    flush_batch();
    return stats;
}

} // namespace refcat::mr
