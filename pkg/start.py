#!/usr/bin/env python3
"""
Development helper for coopreg
"""

import argparse
import subprocess
import sys


def start_dev():
    """API with auto-reload"""
    print("🚀 Starting coopreg API in development mode...")
    cmd = [
        "uvicorn",
        "app.main:app",
        "--host", "0.0.0.0",
        "--port", "4123",
        "--reload",
        "--log-level", "debug"
    ]
    subprocess.run(cmd)


def start_prod():
    print("🚀 Starting coopreg API in production mode...")
    subprocess.run([sys.executable, "main.py"])


def run_tests(slow: bool):
    print("🧪 Running test suite...")
    cmd = [sys.executable, "-m", "pytest"]
    if slow:
        cmd.append("--runslow")
    subprocess.run(cmd)


def run_demo():
    """Check and simulate the harmonic_chain scenario through the CLI"""
    print("📈 Checking and simulating harmonic_chain...")
    scenario = "scenarios/harmonic_chain.json"
    subprocess.run([sys.executable, "-m", "app.cli", "check", "--scenario", scenario])
    subprocess.run([sys.executable, "-m", "app.cli", "run", "--scenario", scenario, "--csv", "harmonic_chain.csv"])


def show_info():
    print("📁 coopreg Project Structure:")
    print("""
app/
├── cli.py               # coopreg check | synth | run | sweep
├── config.py            # Environment configuration
├── main.py              # FastAPI application
├── models/              # Pydantic models (scenario schema, requests, responses)
├── core/                # Numerics, graphs, synthesis, simulation, file I/O
└── api/                 # API endpoints
    ├── router.py
    └── endpoints/       # regulation, health, config, status

scenarios/               # Shipped scenario fixtures
tests/                   # Test suite
main.py                  # API entry point
start.py                 # This development script
""")

    print("\n🔗 Useful endpoints:")
    print("  • API Documentation: http://localhost:4123/docs")
    print("  • Health Check: http://localhost:4123/health")
    print("  • Scenarios: http://localhost:4123/scenarios")
    print("  • Configuration: http://localhost:4123/config")


def main():
    parser = argparse.ArgumentParser(description="coopreg Development Helper")
    parser.add_argument("command", choices=["dev", "prod", "test", "test-slow", "demo", "info"],
                        help="Command to execute")

    args = parser.parse_args()

    if args.command == "dev":
        start_dev()
    elif args.command == "prod":
        start_prod()
    elif args.command == "test":
        run_tests(slow=False)
    elif args.command == "test-slow":
        run_tests(slow=True)
    elif args.command == "demo":
        run_demo()
    elif args.command == "info":
        show_info()


if __name__ == "__main__":
    main()
