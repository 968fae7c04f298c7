#include "evorl/worker/supervisor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "evorl/evo/candidate.hpp"

namespace evorl::worker {

namespace {

void write_all(int fd, const std::string& s) {
  std::size_t off = 0;
  while (off < s.size()) {
    const ssize_t n = ::write(fd, s.data() + off, s.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return;
    }
    off += static_cast<std::size_t>(n);
  }
}

fitness::TrainingTrace failed_trace(const EvalRequest& r, const std::string& error) {
  fitness::TrainingTrace t;
  t.env_id = r.env;
  t.seed = r.seed;
  t.failed = true;
  t.error = error;
  return t;
}

}  // namespace

WorkerRun run_worker(const std::vector<std::string>& argv, const EvalRequest& request, const Limits& limits,
                     const std::filesystem::path& scratch) {
  if (argv.empty()) throw std::invalid_argument("worker command is empty");
  std::filesystem::create_directories(scratch);
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw std::runtime_error("pipe failed");
  std::vector<std::string> args = argv;
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());
  cargs.push_back(nullptr);
  const std::string dir = scratch.string();
  const std::string err_path = (scratch / "stderr.txt").string();

  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    const int err = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (err >= 0) ::dup2(err, STDERR_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    if (::chdir(dir.c_str()) != 0) ::_exit(127);
    ::setpgid(0, 0);
    const auto cpu = static_cast<rlim_t>(limits.wall_s + 5.0);
    rlimit rl{cpu, cpu + 5};
    ::setrlimit(RLIMIT_CPU, &rl);
    if (limits.memory_bytes > 0) {
      rlimit mem{limits.memory_bytes, limits.memory_bytes};
      ::setrlimit(RLIMIT_AS, &mem);
    }
    ::execvp(cargs[0], cargs.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  signal(SIGPIPE, SIG_IGN);
  write_all(in_pipe[1], encode_request(request) + "\n");
  ::close(in_pipe[1]);

  WorkerRun run;
  std::string buffer, protocol_error;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(limits.wall_s);
  bool open = true;
  while (open) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      run.timed_out = true;
      break;
    }
    pollfd p{out_pipe[0], POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(out_pipe[0], chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      open = false;
      break;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      const std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.empty() || !protocol_error.empty()) continue;
      try {
        run.events.push_back(parse_event(line));
      } catch (const ProtocolError& e) {
        protocol_error = std::string("protocol error: ") + e.what();
      }
    }
  }
  if (run.timed_out) ::kill(-pid, SIGKILL), ::kill(pid, SIGKILL);
  ::close(out_pipe[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

  if (run.timed_out) {
    run.trace = failed_trace(request, "timeout: worker exceeded " + std::to_string(limits.wall_s) + " s");
  } else if (!protocol_error.empty()) {
    run.trace = failed_trace(request, protocol_error);
  } else {
    try {
      run.trace = trace_from_events(run.events, request.env, request.seed);
    } catch (const ProtocolError& e) {
      run.trace = failed_trace(request, std::string("protocol error: ") + e.what() + " (exit code " +
                                            std::to_string(run.exit_code) + ")");
    }
  }
  return run;
}

WorkerEvaluator::WorkerEvaluator(WorkerOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw std::invalid_argument("worker evaluator needs a command");
  if (options_.envs.empty() || options_.seeds.empty()) throw std::invalid_argument("worker evaluator needs envs and seeds");
}

evo::Evaluation WorkerEvaluator::evaluate(const std::string& source) {
  const std::string id = evo::candidate_id(source);
  std::vector<fitness::TrainingTrace> traces(options_.envs.size() * options_.seeds.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t e = 0; e < options_.envs.size(); ++e) {
    for (std::size_t s = 0; s < options_.seeds.size(); ++s) {
      tasks.push_back([this, &traces, &source, &id, e, s] {
        EvalRequest r;
        r.source = source;
        r.env = options_.envs[e];
        r.seed = options_.seeds[s];
        r.total_steps = options_.total_steps;
        r.eval_every = options_.eval_every;
        r.eval_episodes = options_.eval_episodes;
        r.time_limit_s = options_.limits.wall_s;
        const auto dir = options_.scratch_root / id / (r.env + "_seed" + std::to_string(r.seed));
        traces[e * options_.seeds.size() + s] = run_worker(options_.command, r, options_.limits, dir).trace;
      });
    }
  }
  fitness::run_pool(options_.jobs, tasks);
  evo::Evaluation out;
  out.report = fitness::build_report(options_.envs, traces);
  out.feedback = fitness::metrics_summary(traces).to_text();
  out.traces = std::move(traces);
  return out;
}

}  // namespace evorl::worker
