#include "refcat/fuzzy.h"

#include "refcat/io.h"
#include "refcat/normalize.h"
#include "refcat/tsv.h"

#include <algorithm>
#include <stdexcept>

namespace refcat::fuzzy {

const char* to_string(Status s) {
    switch (s) {
    case Status::Exact: return "exact";
    case Status::Strong: return "strong";
    case Status::Weak: return "weak";
    case Status::Different: return "different";
    case Status::Ambiguous: return "ambiguous";
    }
    return "different";
}

const char* to_string(Reason r) {
    switch (r) {
    case Reason::TitleAuthorMatch: return "titleauthormatch";
    case Reason::JaccardAuthors: return "jaccardauthors";
    case Reason::TokenizedAuthors: return "tokenizedauthors";
    case Reason::SlugTitleAuthorMatch: return "slugtitleauthormatch";
    case Reason::VersionedDoi: return "versioneddoi";
    case Reason::ArxivVersion: return "arxivversion";
    case Reason::PmidDoiPair: return "pmiddoipair";
    case Reason::DataciteRelatedId: return "dataciterelatedid";
    case Reason::YearConflict: return "yearconflict";
    case Reason::ContribMismatch: return "contribmismatch";
    case Reason::Blacklisted: return "blacklisted";
    }
    return "contribmismatch";
}

std::optional<Status> status_from_string(std::string_view s) {
    for (Status v : {Status::Exact, Status::Strong, Status::Weak, Status::Different,
                     Status::Ambiguous})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

std::optional<Reason> reason_from_string(std::string_view s) {
    for (Reason v :
         {Reason::TitleAuthorMatch, Reason::JaccardAuthors, Reason::TokenizedAuthors,
          Reason::SlugTitleAuthorMatch, Reason::VersionedDoi, Reason::ArxivVersion,
          Reason::PmidDoiPair, Reason::DataciteRelatedId, Reason::YearConflict,
          Reason::ContribMismatch, Reason::Blacklisted})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

const VerifyConfig& default_verify_config() {
    static const VerifyConfig config;
    return config;
}

std::optional<std::string> candidate_key(const ReleaseRecord& r) {
    if (r.title.empty()) return std::nullopt;
    return slugify_title(r.title);
}

ReleaseRecord to_pseudo_release(const RawReference& r) {
    ReleaseRecord rec;
    if (r.biblio.title) rec.title = *r.biblio.title;
    rec.authors = r.biblio.authors;
    rec.year = r.biblio.year;
    if (r.biblio.doi) rec.ext_ids["doi"] = *r.biblio.doi;
    if (r.biblio.pmid) rec.ext_ids["pmid"] = *r.biblio.pmid;
    if (r.biblio.pmcid) rec.ext_ids["pmcid"] = *r.biblio.pmcid;
    if (r.biblio.arxiv) rec.ext_ids["arxiv"] = *r.biblio.arxiv;
    if (r.biblio.isbn) rec.ext_ids["isbn13"] = *r.biblio.isbn;
    if (r.biblio.container_name) rec.container_name = r.biblio.container_name;
    if (r.biblio.volume) rec.volume = r.biblio.volume;
    if (r.biblio.pages) rec.pages = r.biblio.pages;
    return rec;
}

ReleaseRecord to_pseudo_release(const WikipediaRow& row) {
    RawReference ref;
    ref.biblio = row.cited;
    return to_pseudo_release(ref);
}

namespace {

// Precomputed comparison features of one record.
struct Features {
    std::string title_norm;          // no length floor
    std::optional<std::string> slug; // candidate-key slug (floored)
    std::vector<std::string> ordered_tokens;
    std::set<std::string> token_set;
    std::optional<std::string> surname;
    std::optional<std::string> doi, doi_stripped;
    std::optional<std::string> pmid;
    std::optional<ArxivId> arxiv;
    std::optional<int> year;
    const std::vector<std::string>* related_dois = nullptr;
};

std::string strip_doi_version(const std::string& doi) {
    // trailing ".v<digits>" or "/v<digits>"
    size_t pos = doi.size();
    while (pos > 0 && std::isdigit(static_cast<unsigned char>(doi[pos - 1]))) --pos;
    if (pos == doi.size() || pos < 2) return doi;
    if ((doi[pos - 1] == 'v') && (doi[pos - 2] == '.' || doi[pos - 2] == '/'))
        return doi.substr(0, pos - 2);
    return doi;
}

Features features_of(const ReleaseRecord& r) {
    Features f;
    f.title_norm = normalize_title(r.title);
    f.slug = slugify_title(r.title);
    f.ordered_tokens = ordered_author_tokens(r.authors);
    f.token_set.insert(f.ordered_tokens.begin(), f.ordered_tokens.end());
    f.surname = first_author_surname_slug(r.authors);
    if (auto it = r.ext_ids.find("doi"); it != r.ext_ids.end() && !it->second.empty()) {
        f.doi = it->second;
        f.doi_stripped = strip_doi_version(it->second);
    }
    if (auto it = r.ext_ids.find("pmid"); it != r.ext_ids.end() && !it->second.empty())
        f.pmid = it->second;
    if (auto it = r.ext_ids.find("arxiv"); it != r.ext_ids.end() && !it->second.empty())
        f.arxiv = normalize_arxiv(it->second);
    f.year = r.year;
    f.related_dois = &r.related_dois;
    return f;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

bool subset(const std::set<std::string>& small, const std::set<std::string>& big) {
    return std::all_of(small.begin(), small.end(),
                       [&](const std::string& t) { return big.count(t) > 0; });
}

bool related_id_assertion(const Features& a, const Features& b) {
    if (!b.doi || !a.related_dois) return false;
    return std::find(a.related_dois->begin(), a.related_dois->end(), *b.doi) !=
           a.related_dois->end();
}

} // namespace

MatchResult verify(const ReleaseRecord& ra, const ReleaseRecord& rb,
                   const VerifyConfig& config) {
    Features a = features_of(ra);
    Features b = features_of(rb);

    // 1. stop-listed slug on either side
    if ((a.slug && config.slug_blacklist.count(*a.slug)) ||
        (b.slug && config.slug_blacklist.count(*b.slug)))
        return {Status::Ambiguous, Reason::Blacklisted};

    bool years_agree = !(a.year && b.year && *a.year != *b.year);

    // 2. full title, ordered author tokens, years
    if (!a.title_norm.empty() && a.title_norm == b.title_norm &&
        a.ordered_tokens == b.ordered_tokens && years_agree)
        return {Status::Exact, Reason::TitleAuthorMatch};

    // 3. distinct DOIs naming versions of one deposit
    if (a.doi && b.doi && *a.doi != *b.doi && *a.doi_stripped == *b.doi_stripped)
        return {Status::Strong, Reason::VersionedDoi};

    // 4. same arXiv base, version open or differing
    if (a.arxiv && b.arxiv && a.arxiv->base == b.arxiv->base &&
        !(a.arxiv->version && b.arxiv->version && *a.arxiv->version == *b.arxiv->version))
        return {Status::Strong, Reason::ArxivVersion};

    // 5. pmid+doi pair agreeing on both sides
    if (a.pmid && a.doi && b.pmid && b.doi && *a.pmid == *b.pmid && *a.doi == *b.doi)
        return {Status::Strong, Reason::PmidDoiPair};

    // 6. metadata-asserted relation (either direction)
    if (related_id_assertion(a, b) || related_id_assertion(b, a))
        return {Status::Strong, Reason::DataciteRelatedId};

    // 7. irreconcilable years
    if (a.year && b.year && std::abs(*a.year - *b.year) > config.max_year_gap)
        return {Status::Different, Reason::YearConflict};

    bool slugs_equal = a.slug && b.slug && *a.slug == *b.slug;
    bool both_authored = !a.token_set.empty() && !b.token_set.empty();
    double j = both_authored ? jaccard(a.token_set, b.token_set) : 0.0;

    if (slugs_equal && both_authored) {
        // 8. similar author sets
        if (j >= config.jaccard_strong) return {Status::Strong, Reason::JaccardAuthors};
        // 9. one side's authors contained in the other's
        if (subset(a.token_set.size() <= b.token_set.size() ? a.token_set : b.token_set,
                   a.token_set.size() <= b.token_set.size() ? b.token_set : a.token_set))
            return {Status::Strong, Reason::TokenizedAuthors};
        // 10. first-author surname anchor
        if (a.surname && b.surname && *a.surname == *b.surname)
            return {Status::Strong, Reason::SlugTitleAuthorMatch};
        // 11. shared title but disjoint-looking author sets
        if (j < config.jaccard_mismatch) return {Status::Different, Reason::ContribMismatch};
    }

    // 12. fallbacks
    if (both_authored && j >= config.jaccard_mismatch && j < config.jaccard_strong)
        return {Status::Weak, Reason::JaccardAuthors};
    if (slugs_equal && (a.token_set.empty() != b.token_set.empty()))
        return {Status::Weak, Reason::TokenizedAuthors};
    return {Status::Different, Reason::ContribMismatch};
}

void match_group(std::string_view slug, mr::GroupCursor& group, LineSink& bref_out,
                 MatchGroupStats& stats, const VerifyConfig& config, uint64_t group_cap) {
    (void)slug;
    std::vector<RawReference> refs;
    std::vector<ReleaseRecord> releases;
    uint64_t docs = 0;
    std::string_view rest;
    while (group.next(rest)) {
        if (++docs > group_cap) {
            while (group.next(rest)) {
            }
            ++stats.hot_groups;
            return;
        }
        auto fields = tsv::split_fields(rest);
        if (fields.size() != 2) continue;
        std::string payload = tsv::unescape(fields[1]);
        if (fields[0] == "ref")
            refs.push_back(raw_reference_from_json_line(payload));
        else if (fields[0] == "release")
            releases.push_back(release_from_json_line(payload));
    }
    if (refs.empty() || releases.empty()) return;

    for (const auto& ref : refs) {
        ReleaseRecord pseudo = to_pseudo_release(ref);
        for (const auto& rel : releases) {
            if (ref.source_ident == rel.ident) continue; // self-citation
            ++stats.pairs_verified;
            MatchResult result = verify(pseudo, rel, config);
            if (result.status != Status::Exact && result.status != Status::Strong) continue;
            BiblioRef edge;
            edge.source_ident = ref.source_ident;
            edge.target_ident = rel.ident;
            edge.source_year = ref.source_year;
            edge.target_year = rel.year;
            edge.source_release_stage = ref.source_release_stage;
            edge.match_status =
                result.status == Status::Exact ? BrefStatus::Exact : BrefStatus::Strong;
            edge.match_reason = to_string(result.reason);
            edge.provenance = ref.provenance.empty() ? "fuzzy" : ref.provenance;
            edge.ref_index = ref.ref_index;
            bref_out.write(to_json_line(edge));
            ++stats.edges;
        }
    }
}

mr::Reducer make_fuzzy_match_reducer(MatchGroupStats& stats, const VerifyConfig& config,
                                     uint64_t group_cap) {
    return [&stats, config, group_cap](std::string_view key, mr::GroupCursor& group,
                                       LineSink& out) {
        match_group(key, group, out, stats, config, group_cap);
    };
}

RegressionOutcome run_regression_file(const std::filesystem::path& cases_tsv,
                                      const VerifyConfig& config) {
    RegressionOutcome outcome;
    auto source = open_line_source(cases_tsv);
    std::string line;
    int lineno = 0;
    while (source->next(line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = tsv::split_fields(line);
        if (fields.size() != 3)
            throw std::runtime_error("bad regression line " + std::to_string(lineno));
        ReleaseRecord a = release_from_json_line(tsv::unescape(fields[0]));
        ReleaseRecord b = release_from_json_line(tsv::unescape(fields[1]));
        auto expected = status_from_string(fields[2]);
        if (!expected)
            throw std::runtime_error("bad expected status on line " + std::to_string(lineno));
        MatchResult got = verify(a, b, config);
        ++outcome.total;
        ++outcome.fired[got.reason];
        if (got.status != *expected) {
            ++outcome.mismatched;
            outcome.failures.push_back("line " + std::to_string(lineno) + ": expected " +
                                       std::string(to_string(*expected)) + ", got " +
                                       to_string(got.status) + "/" + to_string(got.reason));
        }
    }
    return outcome;
}

} // namespace refcat::fuzzy
