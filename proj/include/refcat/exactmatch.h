#pragma once

#include "refcat/mapreduce.h"
#include "refcat/records.h"

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace refcat {

// Identifier-based joining: references and releases are keyed by
// scheme-prefixed normalized identifiers ("doi:10.1/x", "pmid:123", ...)
// and joined per key group into exact BiblioRef edges.

enum class DocSide { Ref, Release };
const char* to_string(DocSide s);

struct KeyedDoc {
    std::string key; // scheme-prefixed, TSV-safe
    DocSide side = DocSide::Ref;
    std::string payload; // record JSON

    // `key <TAB> side <TAB> escaped-payload`
    std::string to_line() const;
    static std::optional<KeyedDoc> from_line(std::string_view line);

    bool operator==(const KeyedDoc&) const = default;
};

// Groups with more docs than this are junk identifiers (placeholder DOIs
// and the like); they are skipped and counted, never joined.
inline constexpr uint64_t kDefaultGroupCap = 10000;

// One KeyedDoc per identifier that survives normalization; empty when the
// record carries none.
std::vector<KeyedDoc> extract_ref_keys(const RawReference& r);
std::vector<KeyedDoc> extract_release_keys(const ReleaseRecord& r);

// Atomic: join reducers may run concurrently on distinct groups.
struct JoinStats {
    std::atomic<uint64_t> edges{0};
    std::atomic<uint64_t> hot_groups{0};
    std::atomic<uint64_t> self_citations_dropped{0};
};

// Joins one complete key group: emits a BiblioRef for every (ref, release)
// pair. Multiple releases per identifier all get edges; fusion picks one
// later. Self-citations are dropped.
void join_exact_group(std::string_view key, mr::GroupCursor& group, LineSink& bref_out,
                      JoinStats& stats, uint64_t group_cap = kDefaultGroupCap);

// Reducer adapter for the engine (stats accumulated across groups).
mr::Reducer make_exact_join_reducer(JoinStats& stats, uint64_t group_cap = kDefaultGroupCap);

// The scheme behind a join key ("doi:10.1/x" -> "doi").
std::string_view key_scheme(std::string_view key);

} // namespace refcat
