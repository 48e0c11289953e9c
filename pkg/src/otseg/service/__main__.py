"""Run the service: python -m otseg.service [--host H] [--port P]"""
import argparse

import uvicorn


def main():
    parser = argparse.ArgumentParser(prog="otseg.service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()
    uvicorn.run("otseg.service.app:app", host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
