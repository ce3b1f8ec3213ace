#include "refcat/normalize.h"
#include "refcat/synth.h"

#include <doctest.h>

using namespace refcat;

namespace {

// Independent DOI grammar check used against normalizer outputs.
bool doi_grammar_ok(const std::string& v) {
    if (v.rfind("10.", 0) != 0) return false;
    size_t i = 3, digits = 0;
    while (i < v.size() && v[i] >= '0' && v[i] <= '9') ++digits, ++i;
    if (digits < 4 || digits > 9) return false;
    if (i >= v.size() || v[i] != '/') return false;
    if (i + 1 >= v.size()) return false;
    for (char c : v)
        if (c >= 'A' && c <= 'Z') return false; // must be lowercased
    return true;
}

std::string random_bytes(synth::Rng& rng, int max_len) {
    std::string s;
    int len = rng.irange(0, max_len);
    for (int i = 0; i < len; ++i) s += static_cast<char>(rng.u64(256));
    return s;
}

} // namespace

TEST_SUITE("normalize") {

TEST_CASE("doi basics") {
    CHECK(normalize_doi("https://doi.org/10.1234/ABC.5") == "10.1234/abc.5");
    CHECK(normalize_doi("10.15468/xyz") == "10.15468/xyz");
    CHECK(normalize_doi("not a doi") == std::nullopt);
    CHECK(normalize_doi("doi:10.1000/hello") == "10.1000/hello");
    CHECK(normalize_doi("http://dx.doi.org/10.5555/12345678") == "10.5555/12345678");
    CHECK(normalize_doi("  10.1234/trail.),; ") == "10.1234/trail");
    CHECK(normalize_doi("10.123/short-prefix") == std::nullopt);    // 3 digits
    CHECK(normalize_doi("10.1234567890/too-long") == std::nullopt); // 10 digits
    CHECK(normalize_doi("10.1234/") == std::nullopt);
    CHECK(normalize_doi("") == std::nullopt);
}

TEST_CASE("doi idempotent and grammar-true on random bytes") {
    synth::Rng rng(7001);
    for (int i = 0; i < 20000; ++i) {
        std::string raw = random_bytes(rng, 40);
        auto v = normalize_doi(raw);
        if (!v) continue;
        CHECK(doi_grammar_ok(*v));
        CHECK(normalize_doi(*v) == *v);
    }
    for (const char* raw : {"10.1234/abc", "DOI: 10.9999/Z.9", "https://doi.org/10.1000/q"}) {
        auto v = normalize_doi(raw);
        REQUIRE(v.has_value());
        CHECK(doi_grammar_ok(*v));
        CHECK(normalize_doi(*v) == *v);
    }
}

TEST_CASE("pmid and pmcid") {
    CHECK(normalize_pmid("123") == "123");
    CHECK(normalize_pmid("PMID: 00123") == "123");
    CHECK(normalize_pmid("12a3") == std::nullopt);
    CHECK(normalize_pmid("0") == std::nullopt);
    CHECK(normalize_pmcid("PMC1234") == "PMC1234");
    CHECK(normalize_pmcid("pmcid: pmc99") == "PMC99");
    CHECK(normalize_pmcid("1234") == std::nullopt);
    CHECK(normalize_pmcid("PMC") == std::nullopt);
}

TEST_CASE("arxiv ids") {
    auto v = normalize_arxiv("arXiv:1703.09380v2");
    REQUIRE(v.has_value());
    CHECK(v->base == "1703.09380");
    CHECK(v->version == 2);

    auto plain = normalize_arxiv("1703.09380");
    REQUIRE(plain.has_value());
    CHECK(plain->base == "1703.09380");
    CHECK_FALSE(plain->version.has_value());

    CHECK(normalize_arxiv("v2") == std::nullopt);
    CHECK(normalize_arxiv("") == std::nullopt);

    auto old_style = normalize_arxiv("math.GT/0309136v1");
    REQUIRE(old_style.has_value());
    CHECK(old_style->base == "math.gt/0309136");
    CHECK(old_style->version == 1);

    CHECK(normalize_arxiv("12.34") == std::nullopt);
    CHECK(normalize_arxiv(v->base)->base == v->base);
}

TEST_CASE("isbn conversion and validation") {
    // Expected values computed with the standard check-digit arithmetic
    // (independent script), not with this implementation.
    CHECK(normalize_isbn("0-306-40615-2") == "9780306406157");
    CHECK(normalize_isbn("9780306406157") == "9780306406157");
    CHECK(normalize_isbn("978-0-306-40615-7") == "9780306406157");
    CHECK(normalize_isbn("0306406152") == "9780306406157");
    // Valid check digit but no Bookland prefix: not an ISBN-13.
    CHECK(normalize_isbn("1234567890128") == std::nullopt);
    // Bad check digit (correct would be 7).
    CHECK(normalize_isbn("9781234567890") == std::nullopt);
    // Bad ISBN-10 check digit.
    CHECK(normalize_isbn("0306406151") == std::nullopt);
    // ISBN-10 with X check digit.
    CHECK(normalize_isbn("0-9752298-0-X") == "9780975229804");
    CHECK(normalize_isbn("") == std::nullopt);

    auto v = normalize_isbn("0-306-40615-2");
    REQUIRE(v.has_value());
    CHECK(normalize_isbn(*v) == *v);
}

TEST_CASE("title slugs") {
    CHECK(slugify_title("The Canonical—Title!") == "thecanonicaltitle");
    // Folding verified against a Unicode NFKD oracle.
    CHECK(slugify_title("Über Gräphs") == "ubergraphs");
    CHECK(slugify_title("A B") == std::nullopt); // under the length floor
    CHECK(slugify_title("") == std::nullopt);
    CHECK(slugify_title("Errata") == "errata");
    CHECK(slugify_title("Deep Learning") == "deeplearning");
    CHECK(normalize_title("Go") == "go"); // no floor on the full normal form
}

TEST_CASE("slug output alphabet") {
    synth::Rng rng(7002);
    for (int i = 0; i < 20000; ++i) {
        std::string raw = random_bytes(rng, 60);
        auto slug = slugify_title(raw);
        if (!slug) continue;
        CHECK(slug->size() >= kMinSlugLength);
        for (char c : *slug) {
            bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
            CHECK(ok);
        }
        CHECK(slugify_title(*slug) == *slug);
    }
}

TEST_CASE("author tokenization") {
    auto tokens = tokenize_authors({"J. Smith", "Maria K. Doe"});
    CHECK(tokens == std::set<std::string>{"smith", "maria", "doe"});

    CHECK(tokenize_authors({}).empty());

    // Bare single-letter particle joins the following fragment.
    CHECK(tokenize_authors({"Ó Brien"}) == std::set<std::string>{"obrien"});

    // Particles like "van"/"de" stay as ordinary tokens.
    CHECK(tokenize_authors({"Ludwig van Beethoven"}) ==
          std::set<std::string>{"ludwig", "van", "beethoven"});

    // Comma forms split the same way.
    CHECK(tokenize_authors({"Doe, Jane"}) == std::set<std::string>{"doe", "jane"});

    // Duplicate tokens collapse in the set view.
    CHECK(tokenize_authors({"Kim Kim"}) == std::set<std::string>{"kim"});

    auto ordered = ordered_author_tokens({"Maria K. Doe", "J. Smith"});
    CHECK(ordered == std::vector<std::string>{"maria", "doe", "smith"});
}

TEST_CASE("first author surname") {
    CHECK(first_author_surname_slug({"Jane Doe", "Li Wei"}) == "doe");
    CHECK(first_author_surname_slug({"Doe, Jane"}) == "doe");
    CHECK(first_author_surname_slug({"Müller"}) == "muller");
    CHECK(first_author_surname_slug({}) == std::nullopt);
    CHECK(first_author_surname_slug({"X"}) == std::nullopt); // below token floor
}

} // TEST_SUITE
