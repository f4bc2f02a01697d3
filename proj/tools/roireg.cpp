#include <string>
#include <vector>

#include <roireg/cli.hpp>

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return roireg::run_cli(args);
}
