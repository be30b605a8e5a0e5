"""
Main FastAPI application
"""

from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, status
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.router import api_router
from app.config import Config, configure_logging
from app.core import get_version
from app.core.errors import CoopRegError
from app.core.scenario_io import list_fixtures, scenario_dir


banner = r"""
  ___ ___   ___  _ __  _ __ ___  __ _
 / __/ _ \ / _ \| '_ \| '__/ _ \/ _` |
| (_| (_) | (_) | |_) | | |  __/ (_| |
 \___\___/ \___/| .__/|_|  \___|\__, |
                |_|             |___/
"""


@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging()
    print(banner)
    fixtures = list_fixtures()
    if fixtures:
        print(f"Scenario library: {len(fixtures)} scenario(s) in {scenario_dir()}")
    else:
        print(f"Scenario library {scenario_dir()} is empty or missing; inline scenarios only")
    yield


app = FastAPI(
    title="coopreg",
    description="Cooperative output regulation over switching networks: check, synthesize, simulate",
    version=get_version(),
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan
)

cors_origins = Config.CORS_ORIGINS
if cors_origins == "*":
    allowed_origins = ["*"]
else:
    allowed_origins = [origin.strip() for origin in cors_origins.split(",")]

app.add_middleware(
    CORSMiddleware,
    allow_origins=allowed_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(api_router)


@app.exception_handler(HTTPException)
async def http_exception_handler(request, exc):
    return JSONResponse(
        status_code=exc.status_code,
        content=exc.detail
    )


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request, exc):
    # same body shape as a scenario file that fails to parse
    first = exc.errors()[0] if exc.errors() else {}
    where = ".".join(str(p) for p in first.get("loc", ()))
    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={
            "error": {
                "message": f"{where}: {first.get('msg', 'invalid request')}",
                "type": "scenario_parse_error"
            }
        }
    )


@app.exception_handler(CoopRegError)
async def coopreg_exception_handler(request, exc):
    return JSONResponse(
        status_code=status.HTTP_400_BAD_REQUEST,
        content=exc.to_dict()
    )


@app.exception_handler(Exception)
async def general_exception_handler(request, exc):
    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={
            "error": {
                "message": f"Internal server error: {str(exc)}",
                "type": "internal_error"
            }
        }
    )
