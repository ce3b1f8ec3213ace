#include "refcat/normalize.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

namespace refcat {

namespace {

struct FoldEntry {
    uint32_t cp;
    const char* ascii;
};

constexpr FoldEntry kLatinFold[] = {
#include "latin_fold.inc"
};

const std::unordered_map<uint32_t, const char*>& fold_map() {
    static const auto* m = [] {
        auto* map = new std::unordered_map<uint32_t, const char*>();
        map->reserve(std::size(kLatinFold));
        for (const auto& e : kLatinFold) map->emplace(e.cp, e.ascii);
        return map;
    }();
    return *m;
}

// Decodes one UTF-8 codepoint starting at i; advances i. Malformed bytes
// decode as a single replacement (0xFFFD) consuming one byte.
uint32_t decode_utf8(std::string_view s, size_t& i) {
    unsigned char c0 = static_cast<unsigned char>(s[i]);
    if (c0 < 0x80) {
        ++i;
        return c0;
    }
    int extra = 0;
    uint32_t cp = 0;
    if ((c0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = c0 & 0x1F;
    } else if ((c0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = c0 & 0x0F;
    } else if ((c0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = c0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + static_cast<size_t>(extra) >= s.size()) {
        // Not enough continuation bytes.
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k <= extra; ++k) {
        unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += 1 + extra;
    return cp;
}

bool is_combining_mark(uint32_t cp) {
    return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
           (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF);
}

bool starts_with_label(std::string_view s, std::string_view label, size_t& skip) {
    if (s.size() < label.size()) return false;
    for (size_t i = 0; i < label.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) != label[i]) return false;
    skip = label.size();
    return true;
}

int isbn13_check_digit(std::string_view first12) {
    int sum = 0;
    for (size_t i = 0; i < 12; ++i) {
        int d = first12[i] - '0';
        sum += (i % 2 == 0) ? d : 3 * d;
    }
    return (10 - sum % 10) % 10;
}

} // namespace

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<std::string> normalize_doi(std::string_view raw) {
    std::string_view s = trim(raw);
    size_t skip = 0;
    if (starts_with_label(s, "doi:", skip)) s.remove_prefix(skip);
    s = trim(s);
    for (std::string_view prefix :
         {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/",
          "https://www.doi.org/", "http://www.doi.org/"}) {
        if (starts_with_label(s, prefix, skip)) {
            s.remove_prefix(skip);
            break;
        }
    }
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' || s.back() == ')'))
        s.remove_suffix(1);
    if (s.size() < 7 || s[0] != '1' || s[1] != '0' || s[2] != '.') return std::nullopt;
    size_t i = 3;
    size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        ++digits;
        ++i;
    }
    if (digits < 4 || digits > 9) return std::nullopt;
    if (i >= s.size() || s[i] != '/') return std::nullopt;
    std::string_view suffix = s.substr(i + 1);
    if (suffix.empty()) return std::nullopt;
    // Whitespace inside a DOI means we grabbed more than the identifier.
    if (suffix.find_first_of(" \t\n") != std::string_view::npos) return std::nullopt;
    return ascii_lower(s);
}

std::optional<std::string> normalize_pmid(std::string_view raw) {
    std::string_view s = trim(raw);
    size_t skip = 0;
    if (starts_with_label(s, "pmid:", skip)) s.remove_prefix(skip);
    s = trim(s);
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return std::nullopt;
    while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
    if (s == "0") return std::nullopt;
    return std::string(s);
}

std::optional<std::string> normalize_pmcid(std::string_view raw) {
    std::string_view s = trim(raw);
    size_t skip = 0;
    if (starts_with_label(s, "pmcid:", skip)) s.remove_prefix(skip);
    s = trim(s);
    if (!starts_with_label(s, "pmc", skip)) return std::nullopt;
    s.remove_prefix(skip);
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return std::nullopt;
    return "PMC" + std::string(s);
}

std::optional<ArxivId> normalize_arxiv(std::string_view raw) {
    std::string_view s = trim(raw);
    size_t skip = 0;
    if (starts_with_label(s, "arxiv:", skip)) s.remove_prefix(skip);
    s = trim(s);
    if (s.empty()) return std::nullopt;

    std::optional<int> version;
    // Split a trailing vN (N up to 4 digits).
    size_t vpos = s.size();
    while (vpos > 0 && std::isdigit(static_cast<unsigned char>(s[vpos - 1]))) --vpos;
    if (vpos > 0 && vpos < s.size() && (s[vpos - 1] == 'v' || s[vpos - 1] == 'V') &&
        s.size() - vpos <= 4) {
        // Guard: "v2" alone is not an id.
        if (vpos >= 2) {
            version = std::stoi(std::string(s.substr(vpos)));
            s = s.substr(0, vpos - 1);
        }
    }

    auto is_new_style = [](std::string_view id) {
        auto dot = id.find('.');
        if (dot != 4) return false;
        std::string_view a = id.substr(0, dot), b = id.substr(dot + 1);
        if (b.size() < 4 || b.size() > 5) return false;
        auto all_digits = [](std::string_view v) {
            return !v.empty() &&
                   std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); });
        };
        return all_digits(a) && all_digits(b);
    };
    auto is_old_style = [](std::string_view id) {
        auto slash = id.find('/');
        if (slash == std::string_view::npos || slash == 0) return false;
        std::string_view archive = id.substr(0, slash), num = id.substr(slash + 1);
        if (num.size() != 7 ||
            !std::all_of(num.begin(), num.end(), [](unsigned char c) { return std::isdigit(c); }))
            return false;
        // archive: letters, optionally .subclass ("math.GT").
        bool ok = !archive.empty();
        for (char c : archive)
            ok = ok && (std::isalpha(static_cast<unsigned char>(c)) || c == '.' || c == '-');
        return ok;
    };

    std::string base = ascii_lower(s);
    if (!is_new_style(base) && !is_old_style(base)) return std::nullopt;
    return ArxivId{std::move(base), version};
}

std::optional<std::string> normalize_isbn(std::string_view raw) {
    std::string_view t = trim(raw);
    size_t skip = 0;
    if (starts_with_label(t, "isbn:", skip)) t.remove_prefix(skip);
    std::string s;
    s.reserve(t.size());
    for (char c : t) {
        if (c == '-' || c == ' ') continue;
        s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    if (s.size() == 10) {
        int sum = 0;
        for (size_t i = 0; i < 10; ++i) {
            int d;
            if (std::isdigit(static_cast<unsigned char>(s[i])))
                d = s[i] - '0';
            else if (s[i] == 'X' && i == 9)
                d = 10;
            else
                return std::nullopt;
            sum += static_cast<int>(10 - i) * d;
        }
        if (sum % 11 != 0) return std::nullopt;
        std::string core = "978" + s.substr(0, 9);
        return core + static_cast<char>('0' + isbn13_check_digit(core));
    }
    if (s.size() == 13) {
        if (!std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
            return std::nullopt;
        if (s.compare(0, 3, "978") != 0 && s.compare(0, 3, "979") != 0) return std::nullopt;
        if (isbn13_check_digit(std::string_view(s).substr(0, 12)) != s[12] - '0')
            return std::nullopt;
        return s;
    }
    return std::nullopt;
}

std::string fold_to_alnum(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    size_t i = 0;
    while (i < utf8.size()) {
        uint32_t cp = decode_utf8(utf8, i);
        if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (std::isalnum(static_cast<unsigned char>(c)))
                out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            continue;
        }
        if (is_combining_mark(cp)) continue;
        auto it = fold_map().find(cp);
        if (it != fold_map().end()) out += it->second;
        // Anything else (symbols, non-Latin scripts): dropped.
    }
    return out;
}

std::string normalize_title(std::string_view title) {
    return fold_to_alnum(title);
}

std::optional<std::string> slugify_title(std::string_view title) {
    std::string slug = fold_to_alnum(title);
    if (slug.size() < kMinSlugLength) return std::nullopt;
    return slug;
}

namespace {

std::vector<std::string> raw_name_fragments(std::string_view name) {
    std::vector<std::string> frags;
    std::string cur;
    for (char c : name) {
        if (c == ' ' || c == '\t' || c == ',' || c == ';') {
            if (!cur.empty()) frags.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) frags.push_back(std::move(cur));
    return frags;
}

bool is_dotted_initial(std::string_view frag) {
    // "J." / "K." style abbreviations; the fold below would keep the letter.
    return frag.size() >= 2 && frag.back() == '.' && fold_to_alnum(frag).size() <= 1;
}

} // namespace

std::vector<std::string> ordered_author_tokens(const std::vector<std::string>& names) {
    std::vector<std::string> tokens;
    for (const auto& name : names) {
        auto frags = raw_name_fragments(name);
        std::string pending; // bare single-letter fragment waiting to attach
        for (const auto& frag : frags) {
            if (is_dotted_initial(frag)) {
                pending.clear();
                continue;
            }
            std::string folded = fold_to_alnum(frag);
            if (folded.empty()) continue;
            if (!pending.empty()) {
                folded = pending + folded;
                pending.clear();
            }
            if (folded.size() == 1) {
                pending = folded; // particles like "Ó" join the next fragment
                continue;
            }
            if (folded.size() >= kMinAuthorTokenLength) tokens.push_back(std::move(folded));
        }
    }
    return tokens;
}

std::set<std::string> tokenize_authors(const std::vector<std::string>& names) {
    auto ordered = ordered_author_tokens(names);
    return {ordered.begin(), ordered.end()};
}

std::optional<std::string> first_author_surname_slug(const std::vector<std::string>& names) {
    if (names.empty()) return std::nullopt;
    std::string_view name = names.front();
    std::string_view surname;
    auto comma = name.find(',');
    if (comma != std::string_view::npos) {
        surname = trim(name.substr(0, comma));
    } else {
        auto last_space = name.find_last_of(" \t");
        surname = last_space == std::string_view::npos ? name : name.substr(last_space + 1);
    }
    std::string folded = fold_to_alnum(surname);
    if (folded.size() < kMinAuthorTokenLength) return std::nullopt;
    return folded;
}

} // namespace refcat
