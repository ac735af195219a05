#pragma once

// Runs the mixlaw executable in a shell and captures its stdout.

#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

namespace cli {

struct Result {
    int exit_code = -1;
    std::string out;
};

inline std::string golden(const std::string& name) { return std::string(MIXLAW_GOLDEN_DIR) + "/" + name; }

// `args` is appended verbatim; stderr goes to `err_to` (a path or /dev/null).
inline Result run(const std::string& args, const std::string& err_to = "/dev/null") {
    const std::string cmd = std::string(MIXLAW_CLI) + " " + args + " 2>" + err_to;
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace cli
