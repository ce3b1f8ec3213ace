#pragma once

#include "refcat/io.h"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refcat::mr {

// Single-machine external-memory engine: map records to keyed TSV lines,
// sort with a bounded buffer spilling sorted runs to disk, then walk groups
// of equal keys. Keys are compared byte-lexicographically (no locale); with
// stable=true ties are ordered by the full line, which makes whole-pipeline
// reruns byte-identical.

inline constexpr size_t kMinSortBudget = 64ull << 20; // 64 MiB

struct SortSpec {
    size_t memory_budget = 1ull << 30;
    std::filesystem::path tmp_dir = std::filesystem::temp_directory_path();
    int parallelism = 1;
    bool stable = true;
    Codec codec = Codec::Gzip; // codec for spilled runs
    std::string tag = "sort";  // run file name prefix

    void validate() const; // throws on budget < kMinSortBudget etc.
};

struct MapStats {
    uint64_t lines_out = 0;
    uint64_t skipped = 0; // keyless records routed to the side channel
};

// key_fn: record line -> join key (no tab/newline; enforced by escaping) or
// nullopt to skip. Output lines are `key <TAB> escaped-record`.
using KeyFn = std::function<std::optional<std::string>(std::string_view record)>;
MapStats map_to_tsv(LineSource& records, const KeyFn& key_fn, LineSink& keyed_out,
                    LineSink* side_channel = nullptr);

// Parallel variant of the map kernel: batches of records are keyed with
// OpenMP, output order preserved. map_to_tsv is the serial reference.
MapStats map_to_tsv_parallel(LineSource& records, const KeyFn& key_fn, LineSink& keyed_out,
                             LineSink* side_channel, int threads);

struct SortMetrics {
    uint64_t lines = 0;
    uint64_t runs = 0;          // spilled run files (0 = sorted in memory)
    uint64_t spilled_bytes = 0; // uncompressed bytes written to runs
    size_t peak_buffer_bytes = 0;
};

SortMetrics external_sort(LineSource& in, LineSink& out, const SortSpec& spec);

struct GroupStats {
    uint64_t groups = 0;
    uint64_t lines = 0;
    uint64_t failed_groups = 0; // reducer threw; group skipped
};

// Streaming view of one group's lines (the part after the key tab).
class GroupCursor {
public:
    virtual ~GroupCursor() = default;
    virtual bool next(std::string_view& rest) = 0;
};

// Invoked exactly once per distinct key with the full contiguous group. A
// throwing reducer skips that group; the pipeline continues.
using Reducer = std::function<void(std::string_view key, GroupCursor& group, LineSink& out)>;

GroupStats group_reduce(LineSource& sorted, const Reducer& fn, LineSink& out);

// Executes pure reducers concurrently on distinct groups: groups are
// batched up to batch_bytes, reduced with OpenMP, and emitted in key order,
// so output is byte-identical to the serial group_reduce.
GroupStats group_reduce_parallel(LineSource& sorted, const Reducer& fn, LineSink& out,
                                 int threads, size_t batch_bytes = 64ull << 20);

namespace detail {

// Comparison used everywhere: key bytes first, then (stable only) the full
// line.
bool line_less(std::string_view a, std::string_view b, bool stable);

// Sort kernels for one in-memory run. The serial kernel is the reference;
// the parallel kernel slice-sorts with OpenMP and merges, producing the same
// ordering.
void sort_run_serial(std::vector<std::string>& lines, bool stable);
void sort_run_parallel(std::vector<std::string>& lines, bool stable, int threads);

// Budget-unchecked sort core, exposed so tests can exercise run spilling
// and merging with small inputs.
SortMetrics sort_with_budget(LineSource& in, LineSink& out, const SortSpec& spec,
                             size_t budget_bytes);

// K-way merge of sorted run files into out (single-threaded).
void merge_runs(const std::vector<std::filesystem::path>& runs, LineSink& out, bool stable);

// Accounting charge per buffered line (string storage overhead).
inline constexpr size_t kPerLineOverhead = 48;

} // namespace detail

} // namespace refcat::mr
