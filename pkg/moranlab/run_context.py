import contextvars
import logging
import uuid

_run_id = contextvars.ContextVar('run_id', default='no-id')


class RunIDFilter(logging.Filter):
    def filter(self, record):
        record.run_id = _run_id.get()
        return True


def begin_run(run_id=None):
    """Tag every log record emitted in this context with a fresh run id."""
    run_id = run_id or uuid.uuid4().hex[:12]
    _run_id.set(run_id)
    return run_id


def end_run():
    _run_id.set('no-id')


def in_run_context(fn):
    """Wrap fn so pool threads log under the submitting run id."""
    context = contextvars.copy_context()
    return lambda *args: context.copy().run(fn, *args)
