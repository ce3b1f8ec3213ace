#pragma once

#include "refcat/mapreduce.h"
#include "refcat/records.h"

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace refcat::fuzzy {

enum class Status { Exact, Strong, Weak, Different, Ambiguous };

enum class Reason {
    TitleAuthorMatch,
    JaccardAuthors,
    TokenizedAuthors,
    SlugTitleAuthorMatch,
    VersionedDoi,
    ArxivVersion,
    PmidDoiPair,
    DataciteRelatedId,
    YearConflict,
    ContribMismatch,
    Blacklisted,
};

const char* to_string(Status s);
const char* to_string(Reason r);
std::optional<Status> status_from_string(std::string_view s);
std::optional<Reason> reason_from_string(std::string_view s);

struct MatchResult {
    Status status;
    Reason reason;

    bool operator==(const MatchResult&) const = default;
};

// Every tunable of the verification cascade in one place.
struct VerifyConfig {
    double jaccard_strong = 0.5;   // author-set similarity for a strong match
    double jaccard_mismatch = 0.2; // below this, shared titles still mismatch
    int max_year_gap = 2;          // |year delta| beyond this conflicts
    std::set<std::string, std::less<>> slug_blacklist = {
        "editorial",       "editorialboard", "introduction", "erratum",
        "errata",          "correction",     "corrigendum",  "preface",
        "foreword",        "bookreview",     "bookreviews",  "obituary",
        "inthisissue",     "abstracts",      "reply",        "response",
        "authorindex",     "subjectindex",   "newsandnotes", "letterstotheeditor",
    };
};

const VerifyConfig& default_verify_config();

// Fuzzy candidate key: the title slug. Records without a title produce no
// candidates (a title is required for fuzzy matching).
std::optional<std::string> candidate_key(const ReleaseRecord& r);

// References are lifted into the release shape so one verifier serves
// ref-release, release-release and Wikipedia-row pairs.
ReleaseRecord to_pseudo_release(const RawReference& r);
ReleaseRecord to_pseudo_release(const WikipediaRow& row);

// Rule cascade, first hit wins. Total over arbitrary record pairs; status is
// symmetric in the arguments.
//
//  1. either slug blacklisted                          -> ambiguous/blacklisted
//  2. titles, ordered author tokens and years agree    -> exact/titleauthormatch
//  3. DOIs differ but are equal minus a .vN / /vN tail -> strong/versioneddoi
//  4. same arXiv base, version differs or is absent    -> strong/arxivversion
//  5. both pmid and doi present and equal              -> strong/pmiddoipair
//  6. one record's related ids name the other's DOI    -> strong/dataciterelatedid
//  7. both years present, more than max_year_gap apart -> different/yearconflict
//  8. slugs equal, author Jaccard >= jaccard_strong    -> strong/jaccardauthors
//  9. slugs equal, smaller author set contained        -> strong/tokenizedauthors
// 10. slugs equal, first-author surnames equal         -> strong/slugtitleauthormatch
// 11. slugs equal, both sets given, Jaccard < 0.2      -> different/contribmismatch
// 12. fallback: Jaccard in [0.2, 0.5)                  -> weak/jaccardauthors
//     slugs equal and exactly one author set empty     -> weak/tokenizedauthors
//     anything else                                    -> different/contribmismatch
MatchResult verify(const ReleaseRecord& a, const ReleaseRecord& b,
                   const VerifyConfig& config = default_verify_config());

struct MatchGroupStats {
    std::atomic<uint64_t> edges{0};
    std::atomic<uint64_t> hot_groups{0};
    std::atomic<uint64_t> pairs_verified{0};
};

// Verifies every (ref, release) pair of one slug group; emits edges for
// exact and strong verdicts only. Weak, different and ambiguous pairs are
// dropped here and never reach the output.
void match_group(std::string_view slug, mr::GroupCursor& group, LineSink& bref_out,
                 MatchGroupStats& stats, const VerifyConfig& config = default_verify_config(),
                 uint64_t group_cap = 10000);

mr::Reducer make_fuzzy_match_reducer(MatchGroupStats& stats,
                                     const VerifyConfig& config = default_verify_config(),
                                     uint64_t group_cap = 10000);

// Labeled-pair regression file: `recordA-JSON <TAB> recordB-JSON <TAB>
// expected-status` per line; '#' comments and blank lines skipped. The file
// format is implementation independent.
struct RegressionOutcome {
    int total = 0;
    int mismatched = 0;
    std::map<Reason, int> fired; // how often each rule decided a case
    std::vector<std::string> failures;
};

RegressionOutcome run_regression_file(const std::filesystem::path& cases_tsv,
                                      const VerifyConfig& config = default_verify_config());

} // namespace refcat::fuzzy
