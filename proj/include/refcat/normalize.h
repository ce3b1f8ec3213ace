#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace refcat {

// Canonical identifier forms. All normalizers are total: anything that does
// not fit the scheme grammar maps to nullopt, never to an error. Applying a
// normalizer to its own output is a no-op.

// DOI: strips surrounding whitespace, a "doi:" label or an
// http(s)://(dx.)doi.org/ resolver prefix and trailing `.,;)` punctuation,
// lowercases, and accepts only `10.<4-9 digits>/<non-empty suffix>`.
std::optional<std::string> normalize_doi(std::string_view raw);

// PMID: strips a "pmid:" label and leading zeros; canonical form is plain
// digits.
std::optional<std::string> normalize_pmid(std::string_view raw);

// PMCID: strips a "pmcid:" label; canonical form is "PMC" + digits.
std::optional<std::string> normalize_pmcid(std::string_view raw);

struct ArxivId {
    std::string base;            // "1703.09380" or "math.GT/0309136"
    std::optional<int> version;  // trailing vN, when present

    bool operator==(const ArxivId&) const = default;
};

// arXiv: strips an "arXiv:" label, splits a trailing vN into `version`, and
// validates the base against new-style NNNN.NNNNN or old-style
// archive/NNNNNNN forms.
std::optional<ArxivId> normalize_arxiv(std::string_view raw);

// ISBN: removes hyphens and spaces, converts ISBN-10 to ISBN-13 (978 prefix,
// recomputed check digit) and validates the Bookland prefix plus check digit.
std::optional<std::string> normalize_isbn(std::string_view raw);

// Folds UTF-8 text to lowercase ASCII alphanumerics: Latin letters are
// decomposed (compatibility style) with diacritics dropped, everything that
// does not land on [a-z0-9] is removed.
std::string fold_to_alnum(std::string_view utf8);

// Full-title normalization: fold_to_alnum with no length floor. Empty when
// nothing survives.
std::string normalize_title(std::string_view title);

// Title slug used as the fuzzy candidate key. Slugs shorter than
// kMinSlugLength characters are too weak a key and map to nullopt.
inline constexpr size_t kMinSlugLength = 5;
std::optional<std::string> slugify_title(std::string_view title);

// Author tokenization. Names are split on whitespace and commas, each token
// folded like a slug with a floor of kMinAuthorTokenLength. Dotted initials
// ("J.") are dropped; a bare single-letter fragment attaches to the token
// that follows it ("Ó Brien" -> "obrien").
inline constexpr size_t kMinAuthorTokenLength = 2;
std::vector<std::string> ordered_author_tokens(const std::vector<std::string>& names);
std::set<std::string> tokenize_authors(const std::vector<std::string>& names);

// Slug of the first author's surname (text after the last space, or before
// the first comma for "Surname, Given" forms). nullopt when nothing usable.
std::optional<std::string> first_author_surname_slug(const std::vector<std::string>& names);

// Shared helpers.
std::string ascii_lower(std::string_view s);
std::string_view trim(std::string_view s);

} // namespace refcat
