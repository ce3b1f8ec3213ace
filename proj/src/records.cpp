#include "refcat/records.h"

#include <json.hpp>

#include <ctime>
#include <stdexcept>

using nlohmann::json;

namespace refcat {

const char* to_string(ReleaseStage s) {
    switch (s) {
    case ReleaseStage::Published: return "published";
    case ReleaseStage::Preprint: return "preprint";
    case ReleaseStage::Submitted: return "submitted";
    case ReleaseStage::Updated: return "updated";
    case ReleaseStage::Unknown: return "unknown";
    }
    return "unknown";
}

ReleaseStage release_stage_from_string(std::string_view s) {
    if (s == "published") return ReleaseStage::Published;
    if (s == "preprint") return ReleaseStage::Preprint;
    if (s == "submitted") return ReleaseStage::Submitted;
    if (s == "updated") return ReleaseStage::Updated;
    return ReleaseStage::Unknown;
}

int max_plausible_year() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return tm.tm_year + 1900 + 2;
}

bool RefBiblio::empty() const {
    return !unstructured && !title && authors.empty() && !year && !doi && !pmid && !pmcid &&
           !arxiv && !isbn && !url && !container_name && !volume && !pages;
}

std::string RawReference::edge_key() const {
    return source_ident + "_" + std::to_string(ref_index);
}

const char* to_string(BrefStatus s) {
    switch (s) {
    case BrefStatus::Exact: return "exact";
    case BrefStatus::Strong: return "strong";
    case BrefStatus::Unmatched: return "unmatched";
    }
    return "unmatched";
}

BrefStatus bref_status_from_string(std::string_view s) {
    if (s == "exact") return BrefStatus::Exact;
    if (s == "strong") return BrefStatus::Strong;
    if (s == "unmatched") return BrefStatus::Unmatched;
    throw std::invalid_argument("unknown bref status: " + std::string(s));
}

std::string BiblioRef::edge_key() const {
    return source_ident + "_" + std::to_string(ref_index);
}

namespace {

json biblio_to_json(const RefBiblio& b) {
    json j = json::object();
    if (b.unstructured) j["unstructured"] = *b.unstructured;
    if (b.title) j["title"] = *b.title;
    if (!b.authors.empty()) j["authors"] = b.authors;
    if (b.year) j["year"] = *b.year;
    if (b.doi) j["doi"] = *b.doi;
    if (b.pmid) j["pmid"] = *b.pmid;
    if (b.pmcid) j["pmcid"] = *b.pmcid;
    if (b.arxiv) j["arxiv"] = *b.arxiv;
    if (b.isbn) j["isbn"] = *b.isbn;
    if (b.url) j["url"] = *b.url;
    if (b.container_name) j["container_name"] = *b.container_name;
    if (b.volume) j["volume"] = *b.volume;
    if (b.pages) j["pages"] = *b.pages;
    return j;
}

RefBiblio biblio_from_json(const json& j) {
    RefBiblio b;
    auto str = [&](const char* k) -> std::optional<std::string> {
        if (auto it = j.find(k); it != j.end() && it->is_string()) return it->get<std::string>();
        return std::nullopt;
    };
    b.unstructured = str("unstructured");
    b.title = str("title");
    if (auto it = j.find("authors"); it != j.end() && it->is_array())
        for (const auto& a : *it)
            if (a.is_string()) b.authors.push_back(a.get<std::string>());
    if (auto it = j.find("year"); it != j.end() && it->is_number_integer())
        b.year = it->get<int>();
    b.doi = str("doi");
    b.pmid = str("pmid");
    b.pmcid = str("pmcid");
    b.arxiv = str("arxiv");
    b.isbn = str("isbn");
    b.url = str("url");
    b.container_name = str("container_name");
    b.volume = str("volume");
    b.pages = str("pages");
    return b;
}

} // namespace

std::string to_json_line(const ReleaseRecord& r) {
    json j = json::object();
    j["ident"] = r.ident;
    if (!r.title.empty()) j["title"] = r.title;
    if (!r.authors.empty()) j["authors"] = r.authors;
    if (r.year) j["year"] = *r.year;
    if (r.release_stage) j["release_stage"] = to_string(*r.release_stage);
    if (!r.ext_ids.empty()) j["ext_ids"] = r.ext_ids;
    if (!r.related_dois.empty()) j["related_dois"] = r.related_dois;
    if (r.container_name) j["container_name"] = *r.container_name;
    if (r.volume) j["volume"] = *r.volume;
    if (r.issue) j["issue"] = *r.issue;
    if (r.pages) j["pages"] = *r.pages;
    if (r.publisher) j["publisher"] = *r.publisher;
    return j.dump();
}

ReleaseRecord release_from_json_line(std::string_view line) {
    json j = json::parse(line);
    ReleaseRecord r;
    r.ident = j.at("ident").get<std::string>();
    if (auto it = j.find("title"); it != j.end()) r.title = it->get<std::string>();
    if (auto it = j.find("authors"); it != j.end())
        r.authors = it->get<std::vector<std::string>>();
    if (auto it = j.find("year"); it != j.end()) r.year = it->get<int>();
    if (auto it = j.find("release_stage"); it != j.end())
        r.release_stage = release_stage_from_string(it->get<std::string>());
    if (auto it = j.find("ext_ids"); it != j.end())
        r.ext_ids = it->get<std::map<std::string, std::string>>();
    if (auto it = j.find("related_dois"); it != j.end())
        r.related_dois = it->get<std::vector<std::string>>();
    auto str = [&](const char* k) -> std::optional<std::string> {
        if (auto it = j.find(k); it != j.end()) return it->get<std::string>();
        return std::nullopt;
    };
    r.container_name = str("container_name");
    r.volume = str("volume");
    r.issue = str("issue");
    r.pages = str("pages");
    r.publisher = str("publisher");
    return r;
}

std::string to_json_line(const RawReference& r) {
    json j = json::object();
    j["source_ident"] = r.source_ident;
    j["ref_index"] = r.ref_index;
    j["provenance"] = r.provenance;
    j["biblio"] = biblio_to_json(r.biblio);
    if (r.source_year) j["source_year"] = *r.source_year;
    if (r.source_release_stage) j["source_release_stage"] = to_string(*r.source_release_stage);
    return j.dump();
}

RawReference raw_reference_from_json_line(std::string_view line) {
    json j = json::parse(line);
    RawReference r;
    r.source_ident = j.at("source_ident").get<std::string>();
    r.ref_index = j.at("ref_index").get<int64_t>();
    r.provenance = j.value("provenance", std::string{});
    r.biblio = biblio_from_json(j.at("biblio"));
    if (auto it = j.find("source_year"); it != j.end()) r.source_year = it->get<int>();
    if (auto it = j.find("source_release_stage"); it != j.end())
        r.source_release_stage = release_stage_from_string(it->get<std::string>());
    return r;
}

std::string to_json_line(const WikipediaRow& r) {
    json j = json::object();
    j["article_title"] = r.article_title;
    j["cited"] = biblio_to_json(r.cited);
    return j.dump();
}

WikipediaRow wikipedia_row_from_json_line(std::string_view line) {
    json j = json::parse(line);
    WikipediaRow r;
    r.article_title = j.at("article_title").get<std::string>();
    if (auto it = j.find("cited"); it != j.end()) r.cited = biblio_from_json(*it);
    return r;
}

std::string to_json_line(const BiblioRef& r) {
    json j = json::object();
    j["source_ident"] = r.source_ident;
    if (!r.target_ident.empty()) j["target_ident"] = r.target_ident;
    if (r.source_year) j["source_year"] = *r.source_year;
    if (r.target_year) j["target_year"] = *r.target_year;
    if (r.source_release_stage) j["source_release_stage"] = to_string(*r.source_release_stage);
    j["match_status"] = to_string(r.match_status);
    if (!r.match_reason.empty()) j["match_reason"] = r.match_reason;
    if (!r.provenance.empty()) j["provenance"] = r.provenance;
    j["ref_index"] = r.ref_index;
    j["edge_key"] = r.edge_key();
    if (!r.edge_type.empty()) j["edge_type"] = r.edge_type;
    return j.dump();
}

BiblioRef bref_from_json_line(std::string_view line) {
    json j = json::parse(line);
    BiblioRef r;
    r.source_ident = j.at("source_ident").get<std::string>();
    r.target_ident = j.value("target_ident", std::string{});
    if (auto it = j.find("source_year"); it != j.end()) r.source_year = it->get<int>();
    if (auto it = j.find("target_year"); it != j.end()) r.target_year = it->get<int>();
    if (auto it = j.find("source_release_stage"); it != j.end())
        r.source_release_stage = release_stage_from_string(it->get<std::string>());
    r.match_status = bref_status_from_string(j.at("match_status").get<std::string>());
    r.match_reason = j.value("match_reason", std::string{});
    r.provenance = j.value("provenance", std::string{});
    r.ref_index = j.at("ref_index").get<int64_t>();
    r.edge_type = j.value("edge_type", std::string{});
    return r;
}

} // namespace refcat
