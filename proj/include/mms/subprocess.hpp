#pragma once

#include <csignal>
#include <cstring>
#include <chrono>
#include <stdexcept>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace mms {

struct ProcResult {
  int exit_code = -1;   // negative signal number when killed
  bool timed_out = false;
  std::string out;
  std::string err;
};

namespace detail {

inline void set_nonblock(int fd) {
  int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace detail

// Runs argv[0] with the given arguments, feeding `input` on stdin and
// collecting stdout/stderr, with a wall-clock timeout.  Streams are pumped
// concurrently, so scripts larger than the pipe buffer cannot deadlock.
inline ProcResult run_process(const std::vector<std::string>& argv, const std::string& input,
                              double timeout_s) {
  if (argv.empty()) throw std::invalid_argument("empty command");
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) || pipe(out_pipe) || pipe(err_pipe))
    throw std::runtime_error("pipe failed");
  signal(SIGPIPE, SIG_IGN);

  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    dup2(in_pipe[0], 0);
    dup2(out_pipe[1], 1);
    dup2(err_pipe[1], 2);
    close(in_pipe[0]); close(in_pipe[1]);
    close(out_pipe[0]); close(out_pipe[1]);
    close(err_pipe[0]); close(err_pipe[1]);
    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    execvp(cargv[0], cargv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  detail::set_nonblock(in_pipe[1]);
  detail::set_nonblock(out_pipe[0]);
  detail::set_nonblock(err_pipe[0]);

  ProcResult res;
  size_t written = 0;
  bool in_open = true, out_open = true, err_open = true;
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(timeout_s));
  char buf[65536];

  while (out_open || err_open) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      res.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    int wait_ms = int(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
    if (wait_ms < 1) wait_ms = 1;
    if (wait_ms > 200) wait_ms = 200;  // bounded sleep keeps the deadline sharp

    struct pollfd fds[3];
    int nfds = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (in_open && written < input.size()) {
      fds[nfds] = {in_pipe[1], POLLOUT, 0};
      idx_in = nfds++;
    }
    if (out_open) {
      fds[nfds] = {out_pipe[0], POLLIN, 0};
      idx_out = nfds++;
    }
    if (err_open) {
      fds[nfds] = {err_pipe[0], POLLIN, 0};
      idx_err = nfds++;
    }
    if (in_open && written >= input.size()) {
      close(in_pipe[1]);
      in_open = false;
    }
    if (nfds == 0) break;
    int pr = poll(fds, nfds, wait_ms);
    if (pr < 0 && errno != EINTR) break;
    if (pr <= 0) continue;

    if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t n = write(in_pipe[1], input.data() + written, input.size() - written);
      if (n > 0) {
        written += size_t(n);
      } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
        close(in_pipe[1]);
        in_open = false;
      }
      if (in_open && written >= input.size()) {
        close(in_pipe[1]);
        in_open = false;
      }
    }
    if (idx_out >= 0 && (fds[idx_out].revents & (POLLIN | POLLHUP))) {
      ssize_t n = read(out_pipe[0], buf, sizeof buf);
      if (n > 0) {
        res.out.append(buf, size_t(n));
      } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        close(out_pipe[0]);
        out_open = false;
      }
    }
    if (idx_err >= 0 && (fds[idx_err].revents & (POLLIN | POLLHUP))) {
      ssize_t n = read(err_pipe[0], buf, sizeof buf);
      if (n > 0) {
        res.err.append(buf, size_t(n));
      } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        close(err_pipe[0]);
        err_open = false;
      }
    }
  }
  if (in_open) close(in_pipe[1]);
  if (out_open) close(out_pipe[0]);
  if (err_open) close(err_pipe[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status))
    res.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    res.exit_code = -WTERMSIG(status);
  return res;
}

// Splits a command template on whitespace.  Quoting is not supported; paths
// with spaces need a wrapper script.
inline std::vector<std::string> split_command(const std::string& cmd) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : cmd) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace mms
