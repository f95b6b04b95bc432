"""
    vesfuse.errors
    ~~~~~~~~~~~~~~

    Maps the exceptions of :mod:`vesfuse.exc` to machine-readable error
    objects and exit codes of the command line.
"""
from .exc import (
    InputFormatError,
    InvalidArgumentError,
    OutputExistsError,
    RejectedTickError,
    UndefinedMetricError,
    ValidationError,
)
from .utility import first_error_path


def init_app(app):
    @app.errorhandler(ValidationError)
    def validation_error_handler(e):
        path, message = first_error_path(e.errors)
        body = {
            "error": "ValidationError",
            "message": f"{path}: {message}",
            "errors": e.errors,
        }
        return body, 2

    @app.errorhandler(InputFormatError)
    def input_format_error_handler(e):
        body = {
            "error": type(e).__name__,
            "message": str(e),
            "line": e.line,
            "field": e.field,
        }
        return body, 3

    @app.errorhandler(OutputExistsError)
    def output_exists_handler(e):
        return {"error": "OutputExistsError", "message": str(e)}, 4

    @app.errorhandler(InvalidArgumentError)
    def invalid_argument_handler(e):
        return {"error": type(e).__name__, "message": str(e)}, 5

    @app.errorhandler(UndefinedMetricError)
    def undefined_metric_handler(e):
        return {"error": "UndefinedMetricError", "message": str(e)}, 6

    @app.errorhandler(RejectedTickError)
    def rejected_tick_handler(e):
        return {"error": "RejectedTickError", "message": str(e)}, 7
