#include "rooftop/provider.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <set>

#include "httplib.h"
#include "json.hpp"

namespace rooftop {

void ProviderConfig::validate() const {
  if (location.empty()) throw ProviderError("provider location is empty");
  if (classes.empty()) throw ProviderError("provider class list is empty");
  if (batch_size == 0) throw ProviderError("batch size must be positive");
}

ProviderConfig parse_provider(const std::string& spec, Task task) {
  ProviderConfig c;
  c.task = task;
  c.classes = task_classes(task);
  if (spec.rfind("cmd:", 0) == 0) {
    c.kind = ProviderKind::external_process;
    c.location = spec.substr(4);
  } else if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    c.kind = ProviderKind::external_http;
    c.location = spec;
  } else if (spec.rfind("http:", 0) == 0) {
    c.kind = ProviderKind::external_http;
    c.location = "http://" + spec.substr(5);
  } else {
    c.kind = ProviderKind::internal_model;
    c.location = spec;
  }
  c.validate();
  return c;
}

std::string normalize_probabilities(std::vector<double>& p, std::size_t arity) {
  if (p.size() != arity) {
    return "expected " + std::to_string(arity) + " probabilities, got " + std::to_string(p.size());
  }
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) return "probabilities must be finite and non-negative";
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-3) return "probabilities sum to " + std::to_string(sum);
  for (double& v : p) v /= sum;
  return {};
}

std::string encode_request(const std::vector<PredictInput>& batch) {
  std::string body;
  for (const auto& in : batch) {
    nlohmann::ordered_json j;
    j["id"] = in.id;
    if (!in.input_ref.empty()) j["input_ref"] = in.input_ref;
    if (!in.vector.empty() || in.input_ref.empty()) j["vector"] = in.vector;
    body += j.dump() + "\n";
  }
  return body;
}

ProviderReply decode_response(const std::string& body, const std::vector<PredictInput>& batch, std::size_t arity) {
  std::set<std::string> wanted;
  for (const auto& in : batch) wanted.insert(in.id);
  ProviderReply reply;
  std::set<std::string> seen;
  std::size_t pos = 0, line_no = 0;
  while (pos < body.size()) {
    std::size_t end = body.find('\n', pos);
    if (end == std::string::npos) end = body.size();
    std::string line = body.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError("response line " + std::to_string(line_no) + " is not JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw ProviderError("response line " + std::to_string(line_no) + " has no string id");
    }
    const std::string id = j["id"].get<std::string>();
    if (!wanted.count(id)) throw ProviderError("provider answered unknown id " + id);
    if (!seen.insert(id).second) {
      reply.probs.erase(id);
      reply.failures[id] = "answered more than once";
      continue;
    }
    if (!j.contains("probs") || !j["probs"].is_array()) {
      reply.failures[id] = j.contains("error") ? "provider error: " + j["error"].dump() : "response has no probs";
      continue;
    }
    std::vector<double> p;
    try {
      p = j["probs"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      reply.failures[id] = "probs must be numbers";
      continue;
    }
    if (auto why = normalize_probabilities(p, arity); !why.empty()) {
      reply.failures[id] = why;
    } else {
      reply.probs[id] = std::move(p);
    }
  }
  for (const auto& id : wanted) {
    if (!seen.count(id)) reply.failures[id] = "missing from provider response";
  }
  return reply;
}

namespace {

std::string run_process(const std::string& command, const std::string& input, std::chrono::milliseconds timeout) {
  // a provider that exits early must not kill us through SIGPIPE
  static const bool sigpipe_ignored = [] { return signal(SIGPIPE, SIG_IGN) != SIG_ERR; }();
  (void)sigpipe_ignored;
  int in_pipe[2], out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw ProviderError(std::string("pipe: ") + std::strerror(errno));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw ProviderError(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) throw ProviderError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  int to_child = in_pipe[1];
  const int from_child = out_pipe[0];
  fcntl(to_child, F_SETFL, fcntl(to_child, F_GETFL) | O_NONBLOCK);
  fcntl(from_child, F_SETFL, fcntl(from_child, F_GETFL) | O_NONBLOCK);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::string output;
  std::size_t written = 0;
  bool timed_out = false, broken = false;
  if (input.empty()) {
    close(to_child);
    to_child = -1;
  }
  char buf[65536];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {from_child, POLLIN, 0};
    if (to_child >= 0) fds[n++] = {to_child, POLLOUT, 0};
    const int rc = poll(fds, n, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    if (to_child >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = write(to_child, input.data() + written, input.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 && errno != EAGAIN) broken = true;
      if (broken || written == input.size()) {
        close(to_child);
        to_child = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t r = read(from_child, buf, sizeof buf);
      if (r > 0) {
        output.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || (r < 0 && errno != EAGAIN)) {
        break;  // EOF
      }
    }
  }
  if (to_child >= 0) close(to_child);
  close(from_child);
  if (timed_out) kill(pid, SIGKILL);
  int status = 0;
  waitpid(pid, &status, 0);
  if (timed_out) throw ProviderError("provider timed out after " + std::to_string(timeout.count()) + " ms");
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127) throw ProviderError("could not run provider: " + command);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw ProviderError("provider exited with status " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  return output;
}

std::string post_http(const std::string& url, const std::string& body, std::chrono::milliseconds timeout) {
  // split scheme://host:port and path
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
  client.set_connection_timeout(static_cast<time_t>(secs));
  client.set_read_timeout(static_cast<time_t>(secs));
  client.set_write_timeout(static_cast<time_t>(secs));
  auto res = client.Post(path, body, "application/x-ndjson");
  if (!res) throw ProviderError("provider unreachable at " + url + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw ProviderError("provider returned HTTP " + std::to_string(res->status));
  return res->body;
}

}  // namespace

ProviderReply external_provider_call(const ProviderConfig& config, const std::vector<PredictInput>& batch) {
  config.validate();
  const std::string request = encode_request(batch);
  std::string response;
  switch (config.kind) {
    case ProviderKind::external_process: response = run_process(config.location, request, config.timeout); break;
    case ProviderKind::external_http: response = post_http(config.location, request, config.timeout); break;
    case ProviderKind::internal_model: throw ProviderError("internal models are not called over the protocol");
  }
  return decode_response(response, batch, config.classes.size());
}

}  // namespace rooftop
