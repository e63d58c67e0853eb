#include "archdse/hf_eval.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>

#include <json.hpp>

#include "archdse/errors.hpp"
#include "archdse/rng.hpp"

namespace archdse {

SyntheticHf::SyntheticHf(const LfModel& lf, SyntheticHfConfig cfg,
                         std::map<std::string, WorkloadProfile> workloads)
    : lf_(&lf), cfg_(cfg), workloads_(std::move(workloads)) {
  if (cfg_.noise_amplitude < 0) throw ConfigError("synthetic hf: noise_amplitude must be >= 0");
  if (cfg_.bias <= -1.0) throw ConfigError("synthetic hf: bias must be > -1");
  if (cfg_.rob_stall_coeff < 0) throw ConfigError("synthetic hf: rob_stall_coeff must be >= 0");
}

double SyntheticHf::evaluate(const DesignPoint& p, const std::string& workload) {
  auto it = workloads_.find(workload);
  if (it == workloads_.end()) throw ConfigError("synthetic hf: unknown workload '" + workload + "'");
  const WorkloadProfile& w = it->second;

  LfResult lf = lf_->evaluate(p, w);
  const double rob = lf_->binding().value(Role::Rob, p);
  const double decode = lf_->binding().value(Role::Decode, p);

  // In-flight demand the front end generates vs what the ROB can hold.
  const double demand = lf.lambda_bar * decode;
  const double stall = cfg_.rob_stall_coeff * std::max(0.0, demand - rob) / rob;

  // Seeded pseudo-noise in [-sigma, +sigma]; a fixed function of the design,
  // so the synthetic "simulator" is one reproducible ground truth.
  std::uint64_t h = cfg_.seed + 0x9E3779B97F4A7C15ULL;
  for (std::size_t idx : p.indices) h = mix64(h + idx + 0x9E3779B97F4A7C15ULL);
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
  const double eta = cfg_.noise_amplitude * (2.0 * u - 1.0);

  const double cpi = lf.cpi * (1.0 + cfg_.bias) + stall + eta;
  if (!(cpi > 0))
    throw Error("synthetic hf: non-positive CPI; noise_amplitude too large for this space");
  return cpi;
}

LfCpiEvaluator::LfCpiEvaluator(const LfModel& lf, std::map<std::string, WorkloadProfile> workloads)
    : lf_(&lf), workloads_(std::move(workloads)) {}

double LfCpiEvaluator::evaluate(const DesignPoint& p, const std::string& workload) {
  auto it = workloads_.find(workload);
  if (it == workloads_.end()) throw ConfigError("lf evaluator: unknown workload '" + workload + "'");
  return lf_->evaluate(p, it->second).cpi;
}

SubprocessHf::SubprocessHf(const DesignSpace& space, SubprocessHfConfig cfg)
    : space_(&space), cfg_(std::move(cfg)) {
  if (cfg_.command.empty()) throw ConfigError("subprocess hf: command must not be empty");
  if (!(cfg_.timeout_seconds > 0)) throw ConfigError("subprocess hf: timeout must be positive");
}

std::string SubprocessHf::request_line(const DesignPoint& p, const std::string& workload) const {
  nlohmann::ordered_json req;
  for (std::size_t j = 0; j < space_->param_count(); ++j)
    req[space_->params()[j].name] = space_->value(p, j);
  req["workload"] = workload;
  return req.dump() + "\n";
}

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct ChildProcess {
  pid_t pid = -1;
  int in_fd = -1;   // child's stdin, write side
  int out_fd = -1;  // child's stdout, read side

  ~ChildProcess() {
    if (in_fd >= 0) ::close(in_fd);
    if (out_fd >= 0) ::close(out_fd);
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      int status = 0;
      ::waitpid(pid, &status, 0);
    }
  }

  /// Reap the child; returns its wait() status. Disarms the destructor kill.
  int reap() {
    int status = 0;
    ::waitpid(pid, &status, 0);
    pid = -1;
    return status;
  }
};

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

double SubprocessHf::evaluate(const DesignPoint& p, const std::string& workload) {
  ignore_sigpipe_once();

  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw EvaluatorCrash("subprocess hf: pipe() failed: " + std::string(std::strerror(errno)));

  pid_t pid = ::fork();
  if (pid < 0) throw EvaluatorCrash("subprocess hf: fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(cfg_.command.c_str()));
    for (const auto& a : cfg_.args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }

  ChildProcess child;
  child.pid = pid;
  child.in_fd = to_child[1];
  child.out_fd = from_child[0];
  ::close(to_child[0]);
  ::close(from_child[1]);

  const std::string request = request_line(p, workload);
  std::size_t written = 0;
  while (written < request.size()) {
    ssize_t n = ::write(child.in_fd, request.data() + written, request.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;  // child died early; the exit status below tells the story
    }
    written += static_cast<std::size_t>(n);
  }
  ::close(child.in_fd);
  child.in_fd = -1;

  const double deadline = now_seconds() + cfg_.timeout_seconds;
  std::string response;
  char buf[4096];
  bool eof = false;
  while (!eof && response.find('\n') == std::string::npos) {
    const double remaining = deadline - now_seconds();
    if (remaining <= 0)
      throw EvaluatorTimeout("subprocess hf: no response within " +
                             std::to_string(cfg_.timeout_seconds) + " s from '" + cfg_.command + "'");
    struct pollfd pfd{child.out_fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(remaining * 1000) + 1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorCrash("subprocess hf: poll() failed");
    }
    if (rc == 0) continue;  // re-check the deadline
    ssize_t n = ::read(child.out_fd, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorCrash("subprocess hf: read() failed");
    }
    if (n == 0)
      eof = true;
    else
      response.append(buf, static_cast<std::size_t>(n));
  }
  ::close(child.out_fd);
  child.out_fd = -1;

  const int status = child.reap();
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw EvaluatorCrash("subprocess hf: '" + cfg_.command + "' exited with status " +
                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

  const auto nl = response.find('\n');
  std::string line = nl == std::string::npos ? response : response.substr(0, nl);
  if (line.empty()) throw MalformedResponse("subprocess hf: empty response from '" + cfg_.command + "'");

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw MalformedResponse("subprocess hf: unparsable response: " + std::string(e.what()));
  }
  if (doc.contains("error"))
    throw EvaluatorError("subprocess hf: evaluator reported: " + doc["error"].dump());
  if (!doc.contains("cpi") || !doc["cpi"].is_number())
    throw MalformedResponse("subprocess hf: response missing numeric 'cpi' field");
  const double cpi = doc["cpi"].get<double>();
  if (!(cpi > 0)) throw MalformedResponse("subprocess hf: cpi must be positive, got " + doc["cpi"].dump());
  return cpi;
}

}  // namespace archdse
