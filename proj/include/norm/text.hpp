#pragma once

#include <string>
#include <vector>

namespace norm {

/// Canonical form used by every matcher: NFKC, case-folded, curly
/// quotes/apostrophes mapped to ASCII, whitespace runs collapsed,
/// ends trimmed.
std::string normalize_text(const std::string& s);

/// Whitespace tokenization of already-normalized text.
std::vector<std::string> tokenize(const std::string& s);

/// Contiguous length-n substrings (byte-level over normalized UTF-8).
/// A non-empty string shorter than n yields the string itself.
std::vector<std::string> char_ngrams(const std::string& s, int n);

}  // namespace norm
