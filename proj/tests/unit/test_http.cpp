#include <gtest/gtest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <thread>

#include "fixtures.hpp"
#include "studysim/openai_http.hpp"

using namespace studysim;

namespace {

class FakeProvider {
 public:
  FakeProvider() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = json::parse(req.body);
      if (fail_next_.exchange(false)) {
        res.status = 503;
        res.set_content(R"({"error":{"message":"overloaded"}})", "application/json");
        return;
      }
      json choice{{"message", {{"role", "assistant"}, {"content", "Paris"}}}};
      if (last_body_.value("logprobs", false)) {
        choice["logprobs"] = {{"content",
                               {{{"token", "Paris"},
                                 {"logprob", -0.1},
                                 {"top_logprobs",
                                  {{{"token", "Paris"}, {"logprob", std::log(0.75)}},
                                   {{"token", "Lyon"}, {"logprob", std::log(0.25)}}}}}}}};
      }
      res.set_content(json{{"choices", {choice}}}.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data":[{"embedding":[0.5,0.25]}]})", "application/json");
    });
    server_.Post("/v1/files", [this](const httplib::Request& req, httplib::Response& res) {
      uploaded_purpose_ = req.get_file_value("purpose").content;
      uploaded_file_ = req.get_file_value("file").content;
      res.set_content(R"({"id":"file-1"})", "application/json");
    });
    server_.Post("/v1/fine_tuning/jobs", [this](const httplib::Request& req, httplib::Response& res) {
      job_body_ = json::parse(req.body);
      res.set_content(R"({"id":"ft-123","status":"queued"})", "application/json");
    });
    server_.Post("/v1/denied/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.status = 401;
      res.set_content(R"({"error":{"message":"bad key"}})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig endpoint(const std::string& path = "/v1") const {
    EndpointConfig e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port_) + path;
    e.api_key = "sk-test";
    e.timeout = std::chrono::seconds(5);
    return e;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_auth_;
  json last_body_;
  std::atomic<bool> fail_next_{false};
  std::string uploaded_purpose_, uploaded_file_;
  json job_body_;
};

LMRequest ask(bool logprobs) {
  LMRequest r;
  r.model_id = "gpt-4o-mini";
  r.messages = {{Role::System, "sys"}, {Role::User, "Capital of France?"}};
  r.seed = 3;
  r.want_logprobs = logprobs;
  r.top_k_logprobs = 5;
  return r;
}

}  // namespace

TEST(OpenAI, CompletionRoundTrip) {
  FakeProvider p;
  OpenAIBackend b(p.endpoint());
  const auto c = b.complete(ask(false));
  EXPECT_EQ(c.text, "Paris");
  EXPECT_FALSE(c.first_token_distribution.has_value());
  EXPECT_EQ(p.last_auth_, "Bearer sk-test");
  EXPECT_EQ(p.last_body_["messages"][0]["role"], "system");
  EXPECT_EQ(p.last_body_["seed"], 3);
  EXPECT_FALSE(p.last_body_.contains("logprobs"));
}

TEST(OpenAI, LogprobsBecomeDistribution) {
  FakeProvider p;
  OpenAIBackend b(p.endpoint());
  const auto c = b.complete(ask(true));
  EXPECT_EQ(p.last_body_["top_logprobs"], 5);
  ASSERT_TRUE(c.first_token_distribution.has_value());
  EXPECT_NEAR(c.first_token_distribution->probs[0], 0.75, 1e-12);
  EXPECT_EQ(c.first_token_distribution->token_labels[1], "Lyon");
}

TEST(OpenAI, ServerErrorsAreRetryableThroughGateway) {
  FakeProvider p;
  p.fail_next_ = true;
  GatewayOptions o;
  o.backoff_base = std::chrono::milliseconds(1);
  o.requests_per_minute = 0;
  Gateway g(std::make_shared<OpenAIBackend>(p.endpoint()), o);
  EXPECT_EQ(g.complete(ask(false)).text, "Paris");
  EXPECT_EQ(g.stats().retries, 1u);
}

TEST(OpenAI, ClientErrorsAreFatal) {
  FakeProvider p;
  OpenAIBackend b(p.endpoint("/v1/denied"));
  try {
    b.complete(ask(false));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Fatal);
    EXPECT_NE(std::string(e.what()).find("bad key"), std::string::npos);
  }
}

TEST(OpenAI, MissingKeyIsFatal) {
  EndpointConfig e;
  e.base_url = "http://127.0.0.1:1/v1";
  OpenAIBackend b(e);
  try {
    b.complete(ask(false));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::Fatal);
    EXPECT_NE(std::string(err.what()).find("ConfigError"), std::string::npos);
  }
}

TEST(OpenAI, Embeddings) {
  FakeProvider p;
  OpenAIBackend b(p.endpoint());
  EXPECT_EQ(b.embed("text-embedding-3-small", "x"), (std::vector<double>{0.5, 0.25}));
}

TEST(OpenAI, MalformedCompletionIsFatal) {
  EXPECT_THROW(parse_chat_completion(json{{"choices", json::array()}}, false), Error);
}

TEST(FineTune, SubmitUploadsThenCreatesJob) {
  FakeProvider p;
  const auto dir = fixtures::temp_dir("submit");
  fixtures::write_text(dir / "train.jsonl", "{\"messages\":[]}\n");
  const auto job = submit_finetune(dir / "train.jsonl", "gpt-4o-mini-2024-07-18", p.endpoint());
  EXPECT_EQ(job, "ft-123");
  EXPECT_EQ(p.uploaded_purpose_, "fine-tune");
  EXPECT_EQ(p.uploaded_file_, "{\"messages\":[]}\n");
  EXPECT_EQ(p.job_body_["training_file"], "file-1");
  EXPECT_EQ(p.job_body_["model"], "gpt-4o-mini-2024-07-18");
}

TEST(FineTune, SubmitWithoutKeyIsFatal) {
  EndpointConfig e;
  e.base_url = "http://127.0.0.1:1/v1";
  const auto dir = fixtures::temp_dir("submit-nokey");
  fixtures::write_text(dir / "train.jsonl", "{}\n");
  try {
    submit_finetune(dir / "train.jsonl", "base", e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::Fatal);
  }
}
