#include "refcat/ingest.h"

#include "refcat/normalize.h"

#include <json.hpp>

#include <unordered_map>

using nlohmann::json;

namespace refcat {

namespace {

std::optional<std::string> get_string(const json& j, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        auto it = j.find(k);
        if (it == j.end()) continue;
        if (it->is_string() && !it->get_ref<const std::string&>().empty())
            return it->get<std::string>();
        if (it->is_number_integer()) return std::to_string(it->get<int64_t>());
    }
    return std::nullopt;
}

std::optional<int> get_year(const json& j, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        auto it = j.find(k);
        if (it == j.end()) continue;
        int y = 0;
        if (it->is_number_integer()) {
            y = static_cast<int>(it->get<int64_t>());
        } else if (it->is_string()) {
            const auto& s = it->get_ref<const std::string&>();
            if (s.empty()) continue;
            try {
                size_t pos = 0;
                y = std::stoi(s, &pos);
                if (pos != s.size()) continue;
            } catch (...) {
                continue;
            }
        } else {
            continue;
        }
        if (y < kMinPlausibleYear || y > max_plausible_year()) return std::nullopt;
        return y;
    }
    return std::nullopt;
}

std::vector<std::string> get_authors(const json& j) {
    std::vector<std::string> out;
    if (auto it = j.find("authors"); it != j.end() && it->is_array()) {
        for (const auto& a : *it) {
            if (a.is_string() && !a.get_ref<const std::string&>().empty())
                out.push_back(a.get<std::string>());
            else if (a.is_object()) {
                if (auto n = get_string(a, {"raw_name", "name"})) out.push_back(*n);
            }
        }
    }
    if (out.empty()) {
        if (auto it = j.find("contribs"); it != j.end() && it->is_array())
            for (const auto& c : *it)
                if (c.is_object())
                    if (auto n = get_string(c, {"raw_name", "name"})) out.push_back(*n);
    }
    return out;
}

void put_normalized_id(std::map<std::string, std::string>& ids, const std::string& scheme,
                       const std::string& raw) {
    if (scheme == "doi") {
        if (auto v = normalize_doi(raw)) ids["doi"] = *v;
    } else if (scheme == "pmid") {
        if (auto v = normalize_pmid(raw)) ids["pmid"] = *v;
    } else if (scheme == "pmcid") {
        if (auto v = normalize_pmcid(raw)) ids["pmcid"] = *v;
    } else if (scheme == "arxiv") {
        if (auto v = normalize_arxiv(raw)) {
            ids["arxiv"] = v->base;
            if (v->version) ids["arxiv"] += "v" + std::to_string(*v->version);
        }
    } else if (scheme == "isbn13" || scheme == "isbn") {
        if (auto v = normalize_isbn(raw)) ids["isbn13"] = *v;
    } else if (scheme == "openlibrary" || scheme == "wikipedia") {
        if (!raw.empty()) ids[scheme] = raw;
    }
    // Unknown schemes dropped.
}

} // namespace

std::optional<ReleaseRecord> parse_release(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;

    ReleaseRecord r;
    auto ident = get_string(j, {"ident"});
    if (!ident) return std::nullopt;
    r.ident = *ident;

    if (auto t = get_string(j, {"title"})) r.title = *t;
    r.authors = get_authors(j);
    r.year = get_year(j, {"year", "release_year"});
    if (auto s = get_string(j, {"release_stage", "stage"}))
        r.release_stage = release_stage_from_string(*s);

    if (auto it = j.find("ext_ids"); it != j.end() && it->is_object())
        for (const auto& [k, v] : it->items())
            if (v.is_string()) put_normalized_id(r.ext_ids, k, v.get<std::string>());
    // Convenience: top-level identifiers merged in (explicit ext_ids win).
    for (const char* scheme : {"doi", "pmid", "pmcid", "arxiv", "isbn13"}) {
        if (r.ext_ids.count(scheme)) continue;
        if (auto v = get_string(j, {scheme})) put_normalized_id(r.ext_ids, scheme, *v);
    }

    if (auto it = j.find("related_ids"); it != j.end() && it->is_array()) {
        for (const auto& rel : *it) {
            std::optional<std::string> raw;
            if (rel.is_string())
                raw = rel.get<std::string>();
            else if (rel.is_object())
                raw = get_string(rel, {"doi", "id", "value"});
            if (raw)
                if (auto v = normalize_doi(*raw)) r.related_dois.push_back(*v);
        }
    }

    r.container_name = get_string(j, {"container_name", "journal"});
    r.volume = get_string(j, {"volume"});
    r.issue = get_string(j, {"issue"});
    r.pages = get_string(j, {"pages"});
    r.publisher = get_string(j, {"publisher"});
    return r;
}

namespace {

RefBiblio parse_biblio(const json& j) {
    RefBiblio b;
    b.unstructured = get_string(j, {"unstructured", "raw"});
    b.title = get_string(j, {"title"});
    b.authors = get_authors(j);
    b.year = get_year(j, {"year"});
    if (auto v = get_string(j, {"doi"})) b.doi = normalize_doi(*v);
    if (auto v = get_string(j, {"pmid"})) b.pmid = normalize_pmid(*v);
    if (auto v = get_string(j, {"pmcid"})) b.pmcid = normalize_pmcid(*v);
    if (auto v = get_string(j, {"arxiv", "arxiv_id"})) {
        if (auto a = normalize_arxiv(*v)) {
            b.arxiv = a->base;
            if (a->version) *b.arxiv += "v" + std::to_string(*a->version);
        }
    }
    if (auto v = get_string(j, {"isbn"})) b.isbn = normalize_isbn(*v);
    b.url = get_string(j, {"url"});
    b.container_name = get_string(j, {"container_name", "journal"});
    b.volume = get_string(j, {"volume"});
    b.pages = get_string(j, {"pages"});
    return b;
}

} // namespace

std::optional<RawReference> parse_raw_reference(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;

    RawReference r;
    auto src = get_string(j, {"source_ident", "release_ident", "work_ident"});
    if (!src) return std::nullopt;
    r.source_ident = *src;

    if (auto it = j.find("ref_index"); it != j.end() && it->is_number_integer())
        r.ref_index = it->get<int64_t>();
    else if (auto it2 = j.find("index"); it2 != j.end() && it2->is_number_integer())
        r.ref_index = it2->get<int64_t>();
    if (r.ref_index < 0) r.ref_index = -1;

    if (auto p = get_string(j, {"provenance", "source"})) r.provenance = *p;

    if (auto it = j.find("biblio"); it != j.end() && it->is_object())
        r.biblio = parse_biblio(*it);
    else
        r.biblio = parse_biblio(j); // flat shape: biblio fields at top level
    if (r.biblio.empty()) return std::nullopt;

    r.source_year = get_year(j, {"source_year"});
    if (auto s = get_string(j, {"source_release_stage"}))
        r.source_release_stage = release_stage_from_string(*s);
    return r;
}

std::optional<WikipediaRow> parse_wikipedia_row(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    WikipediaRow r;
    auto title = get_string(j, {"article_title", "page_title"});
    if (!title) return std::nullopt;
    r.article_title = *title;
    if (auto it = j.find("cited"); it != j.end() && it->is_object())
        r.cited = parse_biblio(*it);
    else if (auto it2 = j.find("biblio"); it2 != j.end() && it2->is_object())
        r.cited = parse_biblio(*it2);
    return r;
}

IngestStats ingest_releases(LineSource& in, LineSink& out) {
    IngestStats stats;
    std::string line;
    while (in.next(line)) {
        if (auto r = parse_release(line)) {
            out.write(to_json_line(*r));
            ++stats.accepted;
        } else {
            ++stats.rejected;
        }
    }
    return stats;
}

IngestStats ingest_references(LineSource& in, LineSink& out) {
    IngestStats stats;
    std::unordered_map<std::string, int64_t> next_index; // per citing work
    std::string line;
    while (in.next(line)) {
        auto r = parse_raw_reference(line);
        if (!r) {
            ++stats.rejected;
            continue;
        }
        if (r->ref_index < 0) r->ref_index = next_index[r->source_ident]++;
        out.write(to_json_line(*r));
        ++stats.accepted;
    }
    return stats;
}

IngestStats ingest_wikipedia_rows(LineSource& in, LineSink& out) {
    IngestStats stats;
    std::string line;
    while (in.next(line)) {
        if (auto r = parse_wikipedia_row(line)) {
            out.write(to_json_line(*r));
            ++stats.accepted;
        } else {
            ++stats.rejected;
        }
    }
    return stats;
}

} // namespace refcat
