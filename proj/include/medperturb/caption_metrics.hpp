/*******************************************************************************
* Copyright 2026 The medperturb authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "medperturb/common.hpp"

namespace medperturb {

/// Shared caption tokenization: case-fold, strip punctuation characters,
/// split on whitespace. Tokens emptied by stripping are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    const auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char ch : text) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isspace(u)) flush();
        else if (!std::ispunct(u)) current += static_cast<char>(std::tolower(u));
    }
    flush();
    return tokens;
}

namespace detail {

/// n-gram → count over one token sequence; n-grams are joined with '\x1f'
/// so multi-token grams cannot collide with single tokens.
inline std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string gram = tokens[i];
        for (int j = 1; j < n; ++j) {
            gram += '\x1f';
            gram += tokens[i + j];
        }
        ++counts[gram];
    }
    return counts;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

} // namespace detail

/// Corpus BLEU: geometric mean of clipped n-gram precisions for n = 1..max_n
/// times the brevity penalty exp(min(0, 1 − r/c)). No smoothing: any zero
/// precision zeroes the score. One reference per candidate, aligned by index.
inline double bleu(const std::vector<std::string>& candidates,
                   const std::vector<std::string>& references, int max_n = 4) {
    if (candidates.empty() || candidates.size() != references.size())
        throw std::invalid_argument("bleu: empty corpus or candidate/reference size mismatch");
    if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");

    std::vector<std::vector<std::string>> cand_tokens, ref_tokens;
    for (const std::string& c : candidates) cand_tokens.push_back(tokenize(c));
    for (const std::string& r : references) ref_tokens.push_back(tokenize(r));

    std::size_t cand_len = 0, ref_len = 0;
    for (const auto& t : cand_tokens) cand_len += t.size();
    for (const auto& t : ref_tokens) ref_len += t.size();
    if (cand_len == 0) return 0.0;

    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        std::size_t matched = 0, total = 0;
        for (std::size_t i = 0; i < cand_tokens.size(); ++i) {
            const auto cand_counts = detail::ngram_counts(cand_tokens[i], n);
            const auto ref_counts = detail::ngram_counts(ref_tokens[i], n);
            for (const auto& [gram, count] : cand_counts) {
                total += static_cast<std::size_t>(count);
                const auto it = ref_counts.find(gram);
                if (it != ref_counts.end())
                    matched += static_cast<std::size_t>(std::min(count, it->second));
            }
        }
        if (total == 0 || matched == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    const double brevity =
        std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
    return brevity * std::exp(log_sum / max_n);
}

/// Mean per-sample LCS F-measure with the standard β = 1.2 recall weighting.
inline double rouge_l(const std::vector<std::string>& candidates,
                      const std::vector<std::string>& references) {
    if (candidates.empty() || candidates.size() != references.size())
        throw std::invalid_argument("rouge_l: empty corpus or candidate/reference size mismatch");
    constexpr double beta = 1.2;
    double sum = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::vector<std::string> cand = tokenize(candidates[i]);
        const std::vector<std::string> ref = tokenize(references[i]);
        if (cand.empty() || ref.empty()) continue;
        const double lcs = static_cast<double>(detail::lcs_length(cand, ref));
        if (lcs == 0.0) continue;
        const double precision = lcs / static_cast<double>(cand.size());
        const double recall = lcs / static_cast<double>(ref.size());
        sum += (1.0 + beta * beta) * precision * recall / (recall + beta * beta * precision);
    }
    return sum / static_cast<double>(candidates.size());
}

/// CIDEr result: `value` is the mean clipped TF-IDF cosine in [0,1];
/// `scaled` applies the conventional ×10 presentation factor.
struct CiderScore {
    double value = 0.0;
    double scaled = 0.0;
};

/// TF-IDF n-gram consensus metric (the clipped, length-penalized variant).
/// `references` holds each sample's reference set; `corpus` is the document
/// collection defining the IDF statistics (one entry per document, each a
/// set of captions).
inline CiderScore cider(const std::vector<std::string>& candidates,
                        const std::vector<std::vector<std::string>>& references,
                        const std::vector<std::vector<std::string>>& corpus, int max_n = 4,
                        double length_sigma = 6.0) {
    if (candidates.empty() || candidates.size() != references.size())
        throw std::invalid_argument("cider: empty corpus or candidate/reference size mismatch");
    if (corpus.empty()) throw std::invalid_argument("cider: empty idf corpus");

    // Document frequency per n-gram: the number of corpus documents whose
    // captions contain it at least once.
    std::vector<std::map<std::string, int>> df(static_cast<std::size_t>(max_n));
    for (const std::vector<std::string>& doc : corpus) {
        std::vector<std::map<std::string, int>> seen(static_cast<std::size_t>(max_n));
        for (const std::string& caption : doc) {
            const std::vector<std::string> tokens = tokenize(caption);
            for (int n = 1; n <= max_n; ++n)
                for (const auto& [gram, count] : detail::ngram_counts(tokens, n))
                    seen[static_cast<std::size_t>(n - 1)][gram] = 1;
        }
        for (int n = 0; n < max_n; ++n)
            for (const auto& [gram, one] : seen[static_cast<std::size_t>(n)])
                df[static_cast<std::size_t>(n)][gram] += one;
    }
    const double log_docs = std::log(static_cast<double>(corpus.size()));
    const auto idf = [&](int n, const std::string& gram) {
        const auto it = df[static_cast<std::size_t>(n - 1)].find(gram);
        const int d = it == df[static_cast<std::size_t>(n - 1)].end() ? 0 : it->second;
        return log_docs - std::log(static_cast<double>(std::max(1, d)));
    };
    const auto tfidf_vector = [&](const std::vector<std::string>& tokens, int n) {
        std::map<std::string, double> vec;
        for (const auto& [gram, count] : detail::ngram_counts(tokens, n))
            vec[gram] = count * idf(n, gram);
        return vec;
    };
    const auto norm = [](const std::map<std::string, double>& vec) {
        double s = 0.0;
        for (const auto& [gram, w] : vec) s += w * w;
        return std::sqrt(s);
    };

    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (references[i].empty())
            throw std::invalid_argument("cider: sample with no references");
        const std::vector<std::string> cand_tokens = tokenize(candidates[i]);
        double sample_score = 0.0;
        for (int n = 1; n <= max_n; ++n) {
            const auto cand_vec = tfidf_vector(cand_tokens, n);
            const double cand_norm = norm(cand_vec);
            double ref_avg = 0.0;
            for (const std::string& reference : references[i]) {
                const std::vector<std::string> ref_tokens = tokenize(reference);
                const auto ref_vec = tfidf_vector(ref_tokens, n);
                const double ref_norm = norm(ref_vec);
                if (cand_norm == 0.0 || ref_norm == 0.0) continue;
                double dot = 0.0;
                for (const auto& [gram, w] : cand_vec) {
                    const auto it = ref_vec.find(gram);
                    if (it != ref_vec.end()) dot += std::min(w, it->second) * it->second;
                }
                const double delta =
                    static_cast<double>(cand_tokens.size()) - static_cast<double>(ref_tokens.size());
                const double penalty =
                    std::exp(-delta * delta / (2.0 * length_sigma * length_sigma));
                ref_avg += penalty * dot / (cand_norm * ref_norm);
            }
            sample_score += ref_avg / static_cast<double>(references[i].size());
        }
        total += sample_score / max_n;
    }
    CiderScore score;
    score.value = total / static_cast<double>(candidates.size());
    score.scaled = 10.0 * score.value;
    return score;
}

} // namespace medperturb
