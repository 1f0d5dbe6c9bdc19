#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "studysim/openai_http.hpp"

namespace studysim {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

void require_key(const EndpointConfig& endpoint) {
  if (endpoint.api_key.empty()) {
    throw Error(ErrorCode::Fatal, "ConfigError: no API key configured (set STUDYSIM_API_KEY)");
  }
}

std::unique_ptr<httplib::Client> make_client(const EndpointConfig& endpoint, const ParsedUrl& url) {
  auto cli = std::make_unique<httplib::Client>(url.origin);
  cli->set_connection_timeout(endpoint.timeout);
  cli->set_read_timeout(endpoint.timeout);
  cli->set_write_timeout(endpoint.timeout);
  cli->set_bearer_token_auth(endpoint.api_key);
  return cli;
}

std::string provider_message(const httplib::Response& res) {
  auto body = json::parse(res.body, nullptr, false);
  if (!body.is_discarded() && body.contains("error")) {
    const auto& err = body["error"];
    if (err.is_object() && err.contains("message")) return err["message"].get<std::string>();
    if (err.is_string()) return err.get<std::string>();
  }
  return res.body;
}

json checked_json(const httplib::Result& res, const std::string& what) {
  if (!res) {
    throw Error(ErrorCode::Retryable, what + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorCode::Retryable, what + ": HTTP " + std::to_string(res->status) + " " + provider_message(*res));
  }
  if (res->status >= 400) {
    throw Error(ErrorCode::Fatal, what + ": HTTP " + std::to_string(res->status) + " " + provider_message(*res));
  }
  auto body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::Fatal, what + ": response is not JSON");
  return body;
}

}  // namespace

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  if (const char* base = std::getenv("STUDYSIM_API_BASE"); base && *base) c.base_url = base;
  if (const char* key = std::getenv("STUDYSIM_API_KEY"); key && *key) {
    c.api_key = key;
  } else if (const char* key2 = std::getenv("OPENAI_API_KEY"); key2 && *key2) {
    c.api_key = key2;
  }
  return c;
}

json chat_completion_body(const LMRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  json body{{"model", r.model_id},
            {"messages", messages},
            {"temperature", r.temperature},
            {"seed", r.seed},
            {"max_tokens", r.max_tokens}};
  if (r.want_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = r.top_k_logprobs;
  }
  return body;
}

Completion parse_chat_completion(const json& body, bool want_logprobs) {
  Completion c;
  try {
    const auto& choice = body.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    c.text = content.is_null() ? std::string{} : content.get<std::string>();
    if (want_logprobs && choice.contains("logprobs") && !choice["logprobs"].is_null()) {
      const auto& tokens = choice["logprobs"].at("content");
      if (!tokens.empty()) {
        TokenDistribution d;
        for (const auto& alt : tokens.at(0).at("top_logprobs")) {
          const double p = std::exp(alt.at("logprob").get<double>());
          if (p <= 0.0) continue;
          d.token_labels.push_back(alt.at("token").get<std::string>());
          d.probs.push_back(std::min(p, 1.0));
        }
        if (!d.probs.empty()) c.first_token_distribution = std::move(d);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Fatal, std::string("malformed chat completion: ") + e.what(), body.dump());
  }
  return c;
}

OpenAIBackend::OpenAIBackend(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}

std::string OpenAIBackend::identity() const { return "openai:" + endpoint_.base_url; }

Completion OpenAIBackend::complete(const LMRequest& request) {
  require_key(endpoint_);
  const auto url = parse_url(endpoint_.base_url);
  auto cli = make_client(endpoint_, url);
  auto res = cli->Post(url.prefix + "/chat/completions", chat_completion_body(request).dump(), "application/json");
  return parse_chat_completion(checked_json(res, "chat/completions"), request.want_logprobs);
}

std::vector<double> OpenAIBackend::embed(const std::string& model_id, const std::string& text) {
  require_key(endpoint_);
  const auto url = parse_url(endpoint_.base_url);
  auto cli = make_client(endpoint_, url);
  const json body{{"model", model_id}, {"input", text}};
  auto res = cli->Post(url.prefix + "/embeddings", body.dump(), "application/json");
  const json out = checked_json(res, "embeddings");
  try {
    return out.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Fatal, std::string("malformed embeddings response: ") + e.what());
  }
}

std::string submit_finetune(const std::filesystem::path& file, const std::string& base_model,
                            const EndpointConfig& endpoint) {
  require_key(endpoint);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Fatal, "cannot read fine-tune file " + file.string());
  std::ostringstream content;
  content << in.rdbuf();

  const auto url = parse_url(endpoint.base_url);
  auto cli = make_client(endpoint, url);
  httplib::MultipartFormDataItems items = {
      {"purpose", "fine-tune", "", ""},
      {"file", content.str(), file.filename().string(), "application/jsonl"},
  };
  const json uploaded = checked_json(cli->Post(url.prefix + "/files", items), "files");
  if (!uploaded.contains("id")) throw Error(ErrorCode::Fatal, "file upload returned no id");

  const json job_body{{"training_file", uploaded["id"]}, {"model", base_model}};
  const json job =
      checked_json(cli->Post(url.prefix + "/fine_tuning/jobs", job_body.dump(), "application/json"), "fine_tuning/jobs");
  if (!job.contains("id")) throw Error(ErrorCode::Fatal, "fine-tuning job creation returned no id");
  return job["id"].get<std::string>();
}

}  // namespace studysim
