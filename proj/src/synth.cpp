#include "refcat/synth.h"

#include "refcat/io.h"

#include <filesystem>

namespace refcat::synth {

namespace {

const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> words = {
        "analysis",  "graph",     "citation",   "neural",    "protein",  "quantum",
        "climate",   "survey",    "dynamics",   "learning",  "networks", "genome",
        "spectral",  "bayesian",  "stochastic", "covariant", "archival", "semantic",
        "retrieval", "diffusion", "catalytic",  "membrane",  "orbital",  "seismic",
        "polymer",   "synthesis", "inference",  "topology",  "entropy",  "kinetics",
    };
    return words;
}

const std::vector<std::string>& surname_pool() {
    static const std::vector<std::string> names = {
        "Smith",  "Doe",    "Garcia", "Chen",   "Kumar",  "Nguyen", "Müller", "Silva",
        "Tanaka", "Olsson", "Rossi",  "Novak",  "Haddad", "Okafor", "Brown",  "Ivanov",
        "Dubois", "Kim",    "Patel",  "Larsen", "Moreau", "Santos", "Weber",  "Costa",
    };
    return names;
}

const std::vector<std::string>& given_pool() {
    static const std::vector<std::string> names = {
        "Jane", "John", "Maria", "Wei", "Anja", "Pedro", "Yuki", "Lena",
        "Omar", "Nina", "Paul",  "Sara", "Ivan", "Ada",  "Tom",  "Mira",
    };
    return names;
}

std::string make_doi(Rng& rng, uint64_t n) {
    return "10." + std::to_string(1000 + rng.u64(9000)) + "/synth." + std::to_string(n);
}

std::string make_isbn13(Rng& rng) {
    std::string core = "978";
    for (int i = 0; i < 9; ++i) core += static_cast<char>('0' + rng.u64(10));
    int sum = 0;
    for (size_t i = 0; i < 12; ++i) {
        int d = core[i] - '0';
        sum += (i % 2 == 0) ? d : 3 * d;
    }
    return core + static_cast<char>('0' + (10 - sum % 10) % 10);
}

std::string make_arxiv(Rng& rng) {
    char buf[16];
    snprintf(buf, sizeof buf, "%02d%02d.%05d", static_cast<int>(rng.u64(22)) + 1,
             static_cast<int>(rng.u64(12)) + 1, static_cast<int>(rng.u64(99999)) + 1);
    return buf;
}

} // namespace

std::string random_title(Rng& rng) {
    int n = rng.irange(3, 7);
    std::string title;
    for (int i = 0; i < n; ++i) {
        std::string w = rng.pick(word_pool());
        if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        if (!title.empty()) title += ' ';
        title += w;
    }
    return title;
}

std::vector<std::string> random_authors(Rng& rng, int max_authors) {
    int n = rng.irange(0, max_authors);
    std::vector<std::string> authors;
    authors.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        authors.push_back(rng.pick(given_pool()) + " " + rng.pick(surname_pool()));
    return authors;
}

Corpus make_corpus(const CorpusSpec& spec) {
    Rng rng(spec.seed);
    Corpus corpus;
    corpus.releases.reserve(static_cast<size_t>(spec.releases));

    for (int i = 0; i < spec.releases; ++i) {
        ReleaseRecord r;
        char ident[24];
        snprintf(ident, sizeof ident, "rel%07d", i);
        r.ident = ident;
        r.title = random_title(rng);
        r.authors = random_authors(rng, 4);
        if (rng.chance(0.9)) r.year = rng.irange(1960, 2023);
        if (rng.chance(0.8))
            r.release_stage = rng.chance(0.8) ? ReleaseStage::Published : ReleaseStage::Preprint;
        if (rng.chance(0.70)) r.ext_ids["doi"] = make_doi(rng, static_cast<uint64_t>(i));
        if (rng.chance(0.30)) r.ext_ids["pmid"] = std::to_string(100000 + i);
        if (rng.chance(0.12)) r.ext_ids["arxiv"] = make_arxiv(rng);
        if (rng.chance(0.06)) r.ext_ids["isbn13"] = make_isbn13(rng);
        corpus.releases.push_back(std::move(r));
    }

    corpus.refs.reserve(static_cast<size_t>(spec.refs));
    const std::vector<std::string> provenances = {"crossref", "grobid", "fatcat-pubmed",
                                                  "fatcat-datacite", "fatcat-crossref"};
    std::vector<int64_t> next_index(static_cast<size_t>(spec.releases), 0);

    for (int i = 0; i < spec.refs; ++i) {
        RawReference ref;
        size_t src = rng.u64(static_cast<uint64_t>(spec.releases));
        ref.source_ident = corpus.releases[src].ident;
        ref.ref_index = next_index[src]++;
        ref.provenance = rng.pick(provenances);

        bool unmatched = rng.chance(spec.ref_unmatched);
        if (unmatched) {
            // Points at nothing in the catalog: fabricated ids in a disjoint
            // space, or noise-only strings.
            if (rng.chance(0.5)) {
                ref.biblio.doi = "10.9999/nowhere." + std::to_string(i);
            } else {
                ref.biblio.unstructured =
                    "[" + std::to_string(i) + "] unpublished manuscript, " +
                    std::to_string(rng.irange(1990, 2020));
            }
            corpus.refs.push_back(std::move(ref));
            continue;
        }

        const ReleaseRecord& target =
            corpus.releases[rng.u64(static_cast<uint64_t>(spec.releases))];
        bool copied_id = false;
        auto copy_id = [&](const char* scheme, std::optional<std::string>& field, double p) {
            auto it = target.ext_ids.find(scheme);
            if (it == target.ext_ids.end() || !rng.chance(p)) return;
            field = it->second;
            copied_id = true;
        };
        copy_id("doi", ref.biblio.doi, spec.ref_has_doi);
        copy_id("pmid", ref.biblio.pmid, spec.ref_has_pmid);
        copy_id("arxiv", ref.biblio.arxiv, spec.ref_has_arxiv);
        copy_id("isbn13", ref.biblio.isbn, spec.ref_has_isbn);

        if (!copied_id || rng.chance(spec.ref_title_only)) {
            ref.biblio.title = target.title;
            if (rng.chance(0.85)) ref.biblio.authors = target.authors;
            if (target.year && rng.chance(0.8)) ref.biblio.year = target.year;
        }
        if (ref.biblio.empty()) ref.biblio.title = target.title;
        corpus.refs.push_back(std::move(ref));
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& releases_path,
                  const std::filesystem::path& refs_path) {
    auto rel_sink = open_line_sink(releases_path);
    for (const auto& r : corpus.releases) rel_sink->write(to_json_line(r));
    rel_sink->close();
    auto ref_sink = open_line_sink(refs_path);
    for (const auto& r : corpus.refs) ref_sink->write(to_json_line(r));
    ref_sink->close();
}

std::vector<std::string> random_keyed_lines(uint64_t seed, size_t count, size_t key_space) {
    Rng rng(seed);
    std::vector<std::string> lines;
    lines.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        std::string key = "k" + std::to_string(rng.u64(key_space));
        std::string payload;
        int len = rng.irange(8, 60);
        payload.reserve(static_cast<size_t>(len));
        for (int c = 0; c < len; ++c)
            payload += static_cast<char>('a' + rng.u64(26));
        lines.push_back(key + "\t" + payload);
    }
    return lines;
}

} // namespace refcat::synth
