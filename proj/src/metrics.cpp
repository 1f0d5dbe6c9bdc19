#include "studysim/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>

#include <boost/math/distributions/students_t.hpp>
#include <spdlog/spdlog.h>

#include "studysim/llm_call.hpp"
#include "studysim/prompts.hpp"

namespace studysim::metrics {

double entropy(const std::vector<double>& probs) {
  double mass = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorCode::InvalidDistribution, "probability out of range");
    mass += p;
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidDistribution, "distribution has zero mass");
  double h = 0.0;
  for (double p : probs) {
    const double q = p / mass;
    if (q > 0.0) h -= q * std::log(q);
  }
  return std::max(0.0, h);
}

double entropy(const TokenDistribution& dist) { return entropy(dist.probs); }

namespace {

std::optional<int> parse_likert(const std::string& raw) {
  std::optional<long> value;
  try {
    const json j = extract_json(raw);
    if (j.contains("score")) {
      const auto& s = j["score"];
      if (s.is_number_integer()) value = s.get<long>();
      else if (s.is_string()) {
        static const std::regex whole(R"(^\s*(-?\d+)\s*$)");
        std::smatch m;
        const std::string str = s.get<std::string>();
        if (std::regex_match(str, m, whole)) value = std::stol(m[1]);
      }
    }
  } catch (const Error&) {
  } catch (const json::exception&) {
  }
  if (!value) {
    static const std::regex first_int(R"(-?\d+(\.\d+)?)");
    std::smatch m;
    if (std::regex_search(raw, m, first_int)) {
      if (m[1].matched) return std::nullopt;
      value = std::stol(m[0]);
    }
  }
  if (!value || *value < 1 || *value > 5) return std::nullopt;
  return static_cast<int>(*value);
}

}  // namespace

SalienceScore salience(Gateway& gateway, std::string_view question, std::string_view context,
                       const MetricModels& models) {
  if (question.empty() || context.empty()) throw Error(ErrorCode::InvalidInput, "salience needs question and context");
  CallSpec spec{models.judge_model, models.temperature, models.seed, 16, std::nullopt};
  const std::string prompt = prompts::salience(context, question);
  std::string last;
  for (int attempt = 0; attempt < models.attempts; ++attempt) {
    last = gateway.complete(make_request(spec, prompt, attempt)).text;
    if (auto v = parse_likert(last)) return SalienceScore{*v};
  }
  throw Error(ErrorCode::MetricError,
              "salience reply not an integer in 1..5 after " + std::to_string(models.attempts) + " attempts", last);
}

EIGResult eig_from_distributions(const TokenDistribution& prior, const TokenDistribution& posterior) {
  EIGResult r;
  r.prior_entropy = entropy(prior);
  r.posterior_entropy = entropy(posterior);
  r.eig = r.prior_entropy - r.posterior_entropy;
  return r;
}

EIGResult eig(Gateway& gateway, std::string_view question, std::string_view article,
              std::string_view answer_first_token, const MetricModels& models) {
  auto distribution = [&](const std::string& prompt) {
    LMRequest r = make_request(CallSpec{models.judge_model, models.temperature, models.seed, 1, std::nullopt}, prompt);
    r.want_logprobs = true;
    r.top_k_logprobs = models.top_k;
    const Completion c = gateway.complete(r);
    if (!c.first_token_distribution || c.first_token_distribution->probs.empty()) {
      throw Error(ErrorCode::MetricUnavailable, "backend returned no log-probabilities");
    }
    return *c.first_token_distribution;
  };
  const auto prior = distribution(prompts::eig_prior(article, question));
  const auto posterior = distribution(prompts::eig_posterior(article, question, answer_first_token));
  return eig_from_distributions(prior, posterior);
}

std::string first_token(std::string_view answer) {
  const auto begin = answer.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = answer.find_first_of(" \t\r\n", begin);
  return std::string(answer.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin));
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::StatError,
                "length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 3) throw Error(ErrorCode::StatError, "spearman needs at least 3 samples");
  for (double v : x) if (!std::isfinite(v)) throw Error(ErrorCode::StatError, "non-finite sample");
  for (double v : y) if (!std::isfinite(v)) throw Error(ErrorCode::StatError, "non-finite sample");

  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const std::size_t n = x.size();
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::StatError, "constant input has undefined rank correlation");

  CorrelationResult r;
  r.n = n;
  r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n) - 2.0;
  if (std::abs(r.rho) >= 1.0 || df <= 0.0) {
    r.p_value = std::abs(r.rho) >= 1.0 ? 0.0 : 1.0;
    return r;
  }
  const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
  boost::math::students_t dist(df);
  r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  return r;
}

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto a = rouge_tokens(candidate);
  const auto b = rouge_tokens(reference);
  if (a.empty() || b.empty()) return 0.0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[b.size()]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(a.size());
  const double r = lcs / static_cast<double>(b.size());
  return 2.0 * p * r / (p + r);
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorCode::InvalidInput, "embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::InvalidInput, "zero embedding");
  return dot / std::sqrt(na * nb);
}

SimilarityResult similarity_to_exam(Gateway& gateway, std::string_view question, const Exam& exam,
                                    const MetricModels& models) {
  if (exam.questions.empty()) throw Error(ErrorCode::EmptyExam, "exam has no questions");
  SimilarityResult out;
  for (const auto& q : exam.questions) out.max_rouge_l = std::max(out.max_rouge_l, rouge_l(question, q.text));
  try {
    const auto qv = gateway.embed(models.embedding_model, std::string(question));
    double best = -1.0;
    for (const auto& q : exam.questions) {
      best = std::max(best, cosine_similarity(qv, gateway.embed(models.embedding_model, q.text)));
    }
    out.max_cosine = best;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Fatal) throw;
    spdlog::warn("embedding similarity unavailable: {}", e.what());
  }
  return out;
}

int bloom_depth(Bloom level) { return static_cast<int>(level) + 1; }

}  // namespace studysim::metrics
