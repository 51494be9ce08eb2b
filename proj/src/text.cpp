#include "norm/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <cctype>
#include <stdexcept>

namespace norm {

std::string normalize_text(const std::string& s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("ICU NFKC_Casefold unavailable");
    }
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(s);

    // Curly apostrophes/quotes to ASCII before folding so "Crohn's"
    // variants all land on the same byte sequence.
    u.findAndReplace(icu::UnicodeString((UChar32)0x2018), "'");
    u.findAndReplace(icu::UnicodeString((UChar32)0x2019), "'");
    u.findAndReplace(icu::UnicodeString((UChar32)0x201C), "\"");
    u.findAndReplace(icu::UnicodeString((UChar32)0x201D), "\"");

    icu::UnicodeString folded = nfkc->normalize(u, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("ICU normalization failed");
    }

    std::string utf8;
    folded.toUTF8String(utf8);

    // Collapse whitespace runs, trim ends.
    std::string out;
    out.reserve(utf8.size());
    bool pending_space = false;
    for (unsigned char c : utf8) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> toks;
    size_t i = 0;
    while (i < s.size()) {
        size_t j = s.find(' ', i);
        if (j == std::string::npos) j = s.size();
        if (j > i) toks.push_back(s.substr(i, j - i));
        i = j + 1;
    }
    return toks;
}

std::vector<std::string> char_ngrams(const std::string& s, int n) {
    std::vector<std::string> grams;
    if (s.empty()) return grams;
    if (static_cast<int>(s.size()) < n) {
        grams.push_back(s);
        return grams;
    }
    for (size_t i = 0; i + n <= s.size(); ++i) {
        grams.push_back(s.substr(i, n));
    }
    return grams;
}

}  // namespace norm
