#include "studysim/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

#include "studysim/error.hpp"

namespace studysim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyExam: return "EmptyExam";
    case ErrorCode::InvalidScore: return "InvalidScore";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Retryable: return "Retryable";
    case ErrorCode::Fatal: return "Fatal";
    case ErrorCode::CacheError: return "CacheError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::LayoutError: return "LayoutError";
    case ErrorCode::SegmentationError: return "SegmentationError";
    case ErrorCode::AnnotationError: return "AnnotationError";
    case ErrorCode::SplitError: return "SplitError";
    case ErrorCode::GenerationError: return "GenerationError";
    case ErrorCode::ExemplarError: return "ExemplarError";
    case ErrorCode::AnswerError: return "AnswerError";
    case ErrorCode::SimulationError: return "SimulationError";
    case ErrorCode::ScoringError: return "ScoringError";
    case ErrorCode::EmptyStudySet: return "EmptyStudySet";
    case ErrorCode::MetricError: return "MetricError";
    case ErrorCode::MetricUnavailable: return "MetricUnavailable";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::StatError: return "StatError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DependencyError: return "DependencyError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("EVP_Digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string short_hash(std::string_view data, std::size_t chars) {
  return sha256_hex(data).substr(0, chars);
}

std::string hash_parts(std::initializer_list<std::string_view> parts, std::size_t chars) {
  std::string joined;
  for (auto p : parts) {
    joined.append(p);
    joined.push_back('\0');
  }
  return short_hash(joined, chars);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace studysim
