#include "refcat/extensions.h"

#include "refcat/exactmatch.h"
#include "refcat/fuse.h"
#include "refcat/normalize.h"
#include "refcat/tsv.h"

#include <json.hpp>

#include <atomic>

using nlohmann::json;

namespace refcat::ext {

namespace {

// Rewrites bref lines with the given edge_type before passing them on.
class EdgeTypeSink final : public LineSink {
public:
    EdgeTypeSink(LineSink& inner, std::string edge_type)
        : inner_(inner), edge_type_(std::move(edge_type)) {}
    void write(std::string_view line) override {
        BiblioRef b = bref_from_json_line(line);
        b.edge_type = edge_type_;
        inner_.write(to_json_line(b));
        ++written_;
    }
    uint64_t written() const { return written_; }

private:
    LineSink& inner_;
    std::string edge_type_;
    uint64_t written_ = 0;
};

// Shared tail: key candidate edges by edge_key, sort, fuse.
uint64_t fuse_edges(const std::filesystem::path& edges_file, LineSink& fused_out,
                    const mr::SortSpec& base_spec) {
    auto keyed_path = base_spec.tmp_dir / (base_spec.tag + ".edges-keyed.tsv.gz");
    {
        auto in = open_line_source(edges_file);
        auto keyed = open_line_sink(keyed_path);
        mr::map_to_tsv(
            *in,
            [](std::string_view record) -> std::optional<std::string> {
                return bref_from_json_line(record).edge_key();
            },
            *keyed);
        keyed->close();
    }
    auto sorted_path = base_spec.tmp_dir / (base_spec.tag + ".edges-sorted.tsv.gz");
    {
        auto in = open_line_source(keyed_path);
        auto sorted = open_line_sink(sorted_path);
        mr::SortSpec spec = base_spec;
        spec.tag += "-edges";
        mr::external_sort(*in, *sorted, spec);
        sorted->close();
    }
    uint64_t fused = 0;
    {
        auto in = open_line_source(sorted_path);
        auto reducer = make_fuse_reducer();
        auto stats = mr::group_reduce(*in, reducer, fused_out);
        fused = stats.groups;
    }
    std::filesystem::remove(keyed_path);
    std::filesystem::remove(sorted_path);
    return fused;
}

// Dispatching reducer: identifier-keyed groups get the exact join,
// slug-keyed groups (no ':' in slugs) the fuzzy verifier.
mr::Reducer make_dispatch_reducer(JoinStats& join_stats, fuzzy::MatchGroupStats& fuzzy_stats,
                                  const fuzzy::VerifyConfig& config, uint64_t group_cap) {
    return [&join_stats, &fuzzy_stats, config, group_cap](std::string_view key,
                                                          mr::GroupCursor& group,
                                                          LineSink& out) {
        if (key.find(':') != std::string_view::npos)
            join_exact_group(key, group, out, join_stats, group_cap);
        else
            fuzzy::match_group(key, group, out, fuzzy_stats, config, group_cap);
    };
}

} // namespace

std::string wikipedia_ident(std::string_view article_title) {
    std::string ident = "wikipedia:";
    for (char c : article_title) ident += (c == ' ' ? '_' : c);
    return ident;
}

WikiStats match_wikipedia(LineSource& rows, LineSource& releases, LineSink& fused_out,
                          const mr::SortSpec& spec, const fuzzy::VerifyConfig& config,
                          uint64_t group_cap) {
    WikiStats stats;
    std::filesystem::create_directories(spec.tmp_dir);
    auto keyed_path = spec.tmp_dir / "wiki-keyed.tsv.gz";
    {
        auto keyed = open_line_sink(keyed_path);
        std::string line;
        uint64_t row_number = 0;
        while (rows.next(line)) {
            WikipediaRow row = wikipedia_row_from_json_line(line);
            ++stats.rows;
            RawReference ref;
            ref.source_ident = wikipedia_ident(row.article_title);
            ref.ref_index = static_cast<int64_t>(row_number++);
            ref.provenance = "wikipedia";
            ref.biblio = row.cited;
            std::string payload = to_json_line(ref);

            bool keyed_any = false;
            if (ref.biblio.doi) {
                keyed->write(KeyedDoc{"doi:" + *ref.biblio.doi, DocSide::Ref, payload}.to_line());
                keyed_any = true;
            }
            if (ref.biblio.pmid) {
                keyed->write(
                    KeyedDoc{"pmid:" + *ref.biblio.pmid, DocSide::Ref, payload}.to_line());
                keyed_any = true;
            }
            if (!keyed_any && ref.biblio.title) {
                if (auto slug = slugify_title(*ref.biblio.title)) {
                    keyed->write(KeyedDoc{*slug, DocSide::Ref, payload}.to_line());
                    keyed_any = true;
                }
            }
            if (!keyed_any) ++stats.skipped;
        }
        std::string rel_line;
        while (releases.next(rel_line)) {
            ReleaseRecord rel = release_from_json_line(rel_line);
            for (const char* scheme : {"doi", "pmid"}) {
                auto it = rel.ext_ids.find(scheme);
                if (it != rel.ext_ids.end() && !it->second.empty())
                    keyed->write(KeyedDoc{std::string(scheme) + ":" + it->second,
                                          DocSide::Release, rel_line}
                                     .to_line());
            }
            if (auto slug = fuzzy::candidate_key(rel))
                keyed->write(KeyedDoc{*slug, DocSide::Release, rel_line}.to_line());
        }
        keyed->close();
    }

    auto sorted_path = spec.tmp_dir / "wiki-sorted.tsv.gz";
    {
        auto in = open_line_source(keyed_path);
        auto sorted = open_line_sink(sorted_path);
        mr::SortSpec sort_spec = spec;
        sort_spec.tag = "wiki";
        mr::external_sort(*in, *sorted, sort_spec);
        sorted->close();
    }

    auto raw_edges_path = spec.tmp_dir / "wiki-raw-edges.ndjson.gz";
    {
        auto in = open_line_source(sorted_path);
        auto raw_out = open_line_sink(raw_edges_path);
        EdgeTypeSink typed(*raw_out, kEdgeTypeWikipedia);
        JoinStats join_stats;
        fuzzy::MatchGroupStats fuzzy_stats;
        auto reducer = make_dispatch_reducer(join_stats, fuzzy_stats, config, group_cap);
        mr::group_reduce(*in, reducer, typed);
        raw_out->close();
        stats.raw_pairs = typed.written();
    }

    mr::SortSpec fuse_spec = spec;
    fuse_spec.tag = "wiki-fuse";
    stats.fused_edges = fuse_edges(raw_edges_path, fused_out, fuse_spec);
    std::filesystem::remove(keyed_path);
    std::filesystem::remove(sorted_path);
    std::filesystem::remove(raw_edges_path);
    return stats;
}

std::optional<OpenLibraryEdition> parse_openlibrary_edition(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    OpenLibraryEdition ed;

    std::string key;
    if (auto it = j.find("key"); it != j.end() && it->is_string()) key = it->get<std::string>();
    if (key.rfind("/books/", 0) == 0) key = key.substr(7);
    if (key.empty()) return std::nullopt;
    ed.record.ident = "openlibrary:" + key;
    ed.record.ext_ids["openlibrary"] = key;

    if (auto it = j.find("title"); it != j.end() && it->is_string())
        ed.record.title = it->get<std::string>();

    if (auto it = j.find("authors"); it != j.end() && it->is_array()) {
        for (const auto& a : *it) {
            if (a.is_string())
                ed.record.authors.push_back(a.get<std::string>());
            else if (a.is_object() && a.contains("name") && a["name"].is_string())
                ed.record.authors.push_back(a["name"].get<std::string>());
        }
    }
    if (auto it = j.find("publish_year"); it != j.end() && it->is_number_integer())
        ed.record.year = it->get<int>();
    else if (auto it2 = j.find("year"); it2 != j.end() && it2->is_number_integer())
        ed.record.year = it2->get<int>();

    auto add_isbn = [&](const std::string& raw) {
        if (auto v = normalize_isbn(raw)) ed.isbn13.push_back(*v);
    };
    if (auto it = j.find("isbn_13"); it != j.end()) {
        if (it->is_string()) add_isbn(it->get<std::string>());
        if (it->is_array())
            for (const auto& v : *it)
                if (v.is_string()) add_isbn(v.get<std::string>());
    }
    if (auto it = j.find("isbn_10"); it != j.end()) {
        if (it->is_string()) add_isbn(it->get<std::string>());
        if (it->is_array())
            for (const auto& v : *it)
                if (v.is_string()) add_isbn(v.get<std::string>());
    }
    if (!ed.isbn13.empty()) ed.record.ext_ids["isbn13"] = ed.isbn13.front();
    return ed;
}

OpenLibStats match_openlibrary(LineSource& refs, LineSource& editions, LineSink& fused_out,
                               const mr::SortSpec& spec, const fuzzy::VerifyConfig& config,
                               uint64_t group_cap) {
    OpenLibStats stats;
    std::filesystem::create_directories(spec.tmp_dir);
    auto keyed_path = spec.tmp_dir / "ol-keyed.tsv.gz";
    {
        auto keyed = open_line_sink(keyed_path);
        std::string line;
        while (editions.next(line)) {
            auto ed = parse_openlibrary_edition(line);
            if (!ed) {
                ++stats.rejected_editions;
                continue;
            }
            ++stats.editions;
            std::string payload = to_json_line(ed->record);
            for (const auto& isbn : ed->isbn13)
                keyed->write(KeyedDoc{"isbn13:" + isbn, DocSide::Release, payload}.to_line());
            if (auto slug = fuzzy::candidate_key(ed->record))
                keyed->write(KeyedDoc{*slug, DocSide::Release, payload}.to_line());
        }
        while (refs.next(line)) {
            RawReference ref = raw_reference_from_json_line(line);
            ++stats.refs;
            if (ref.biblio.isbn) {
                keyed->write(
                    KeyedDoc{"isbn13:" + *ref.biblio.isbn, DocSide::Ref, line}.to_line());
                continue;
            }
            // Identifier-less refs take the fuzzy route, as in the core flow.
            if (!extract_ref_keys(ref).empty() || !ref.biblio.title) continue;
            if (auto slug = slugify_title(*ref.biblio.title))
                keyed->write(KeyedDoc{*slug, DocSide::Ref, line}.to_line());
        }
        keyed->close();
    }

    auto sorted_path = spec.tmp_dir / "ol-sorted.tsv.gz";
    {
        auto in = open_line_source(keyed_path);
        auto sorted = open_line_sink(sorted_path);
        mr::SortSpec sort_spec = spec;
        sort_spec.tag = "ol";
        mr::external_sort(*in, *sorted, sort_spec);
        sorted->close();
    }

    auto raw_edges_path = spec.tmp_dir / "ol-raw-edges.ndjson.gz";
    {
        auto in = open_line_source(sorted_path);
        auto raw_out = open_line_sink(raw_edges_path);
        EdgeTypeSink typed(*raw_out, kEdgeTypeOpenLibrary);
        JoinStats join_stats;
        fuzzy::MatchGroupStats fuzzy_stats;
        auto reducer = make_dispatch_reducer(join_stats, fuzzy_stats, config, group_cap);
        mr::group_reduce(*in, reducer, typed);
        raw_out->close();
        stats.raw_pairs = typed.written();
    }

    mr::SortSpec fuse_spec = spec;
    fuse_spec.tag = "ol-fuse";
    stats.fused_edges = fuse_edges(raw_edges_path, fused_out, fuse_spec);
    std::filesystem::remove(keyed_path);
    std::filesystem::remove(sorted_path);
    std::filesystem::remove(raw_edges_path);
    return stats;
}

EdgeTypeCounts edge_type_report(LineSource& core_bref, LineSource& releases, LineSource* wiki,
                                LineSource* openlibrary, const mr::SortSpec& spec) {
    EdgeTypeCounts counts;
    std::filesystem::create_directories(spec.tmp_dir);

    // Two sort-joins against the catalog decide DOI presence per endpoint:
    // pass 1 keys matched core edges by source ident, pass 2 by target.
    auto keyed1 = spec.tmp_dir / "etype-keyed1.tsv.gz";
    auto flags_path = spec.tmp_dir / "etype-release-flags.tsv.gz";
    {
        auto out = open_line_sink(keyed1);
        auto flags = open_line_sink(flags_path);
        std::string line;
        while (releases.next(line)) {
            ReleaseRecord rel = release_from_json_line(line);
            bool has_doi = rel.ext_ids.count("doi") > 0;
            std::string flag_line = tsv::escape(rel.ident) + "\trel\t" + (has_doi ? "1" : "0");
            out->write(flag_line);
            flags->write(flag_line);
        }
        while (core_bref.next(line)) {
            BiblioRef b = bref_from_json_line(line);
            if (b.match_status == BrefStatus::Unmatched) continue;
            out->write(tsv::escape(b.source_ident) + "\tedge\t" + tsv::escape(b.target_ident));
        }
        out->close();
        flags->close();
    }
    auto sorted1 = spec.tmp_dir / "etype-sorted1.tsv.gz";
    {
        auto in = open_line_source(keyed1);
        auto out = open_line_sink(sorted1);
        mr::SortSpec s = spec;
        s.tag = "etype1";
        mr::external_sort(*in, *out, s);
        out->close();
    }

    // Pass 2 input: edges re-keyed by target with the source flag resolved,
    // plus the release flag lines again.
    auto keyed2 = spec.tmp_dir / "etype-keyed2.tsv.gz";
    {
        auto in = open_line_source(sorted1);
        auto out = open_line_sink(keyed2);
        mr::Reducer resolve_source = [](std::string_view, mr::GroupCursor& group,
                                        LineSink& sink) {
            bool has_doi = false;
            std::vector<std::string> targets;
            std::string_view rest;
            while (group.next(rest)) {
                auto fields = tsv::split_fields(rest);
                if (fields.size() != 2) continue;
                if (fields[0] == "rel")
                    has_doi = has_doi || fields[1] == "1";
                else if (fields[0] == "edge")
                    targets.emplace_back(fields[1]);
            }
            for (const auto& t : targets) sink.write(t + "\tsrc\t" + (has_doi ? "1" : "0"));
        };
        mr::group_reduce(*in, resolve_source, *out);
        auto flags = open_line_source(flags_path);
        std::string line;
        while (flags->next(line)) out->write(line);
        out->close();
    }
    auto sorted2 = spec.tmp_dir / "etype-sorted2.tsv.gz";
    {
        auto in = open_line_source(keyed2);
        auto out = open_line_sink(sorted2);
        mr::SortSpec s = spec;
        s.tag = "etype2";
        mr::external_sort(*in, *out, s);
        out->close();
    }
    {
        auto in = open_line_source(sorted2);
        VectorLineSink ignored;
        mr::Reducer classify = [&counts](std::string_view, mr::GroupCursor& group, LineSink&) {
            bool target_has_doi = false;
            uint64_t with_src_doi = 0, without_src_doi = 0;
            std::string_view rest;
            while (group.next(rest)) {
                auto fields = tsv::split_fields(rest);
                if (fields.size() != 2) continue;
                if (fields[0] == "rel") {
                    target_has_doi = target_has_doi || fields[1] == "1";
                } else if (fields[0] == "src") {
                    ++(fields[1] == "1" ? with_src_doi : without_src_doi);
                }
            }
            counts.doi_doi += target_has_doi ? with_src_doi : 0;
            counts.other_matched +=
                without_src_doi + (target_has_doi ? 0 : with_src_doi);
        };
        mr::group_reduce(*in, classify, ignored);
    }

    std::string line;
    if (wiki)
        while (wiki->next(line)) ++counts.source_wikipedia;
    if (openlibrary)
        while (openlibrary->next(line)) ++counts.target_open_library;

    counts.total = counts.doi_doi + counts.other_matched + counts.source_wikipedia +
                   counts.target_open_library + counts.target_url;

    for (const auto& p : {keyed1, flags_path, sorted1, keyed2, sorted2})
        std::filesystem::remove(p);
    return counts;
}

void write_edge_type_tsv(const EdgeTypeCounts& counts, LineSink& out) {
    out.write("edge_type\tcount");
    out.write(std::string(kEdgeTypeDoiDoi) + "\t" + std::to_string(counts.doi_doi));
    out.write(std::string(kEdgeTypeOpenLibrary) + "\t" +
              std::to_string(counts.target_open_library));
    out.write(std::string(kEdgeTypeWikipedia) + "\t" + std::to_string(counts.source_wikipedia));
    out.write(std::string(kEdgeTypeUrl) + "\t" + std::to_string(counts.target_url));
    out.write("other-matched\t" + std::to_string(counts.other_matched));
    out.write("total\t" + std::to_string(counts.total));
}

} // namespace refcat::ext
