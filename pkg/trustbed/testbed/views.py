from django.http import HttpResponse, JsonResponse
from django.views.decorators.http import require_GET

from .analysis import wide_from_points
from .experiments import FLOAT_FORMAT
from .mongo_repository import MongoUnavailableError, mongo_repository
from .stores import (
    STORE_MONGO,
    STORE_SQL,
    fallback_to_sql,
    get_requested_store,
    sql_get_run,
    sql_list_runs,
    sql_points_frame,
)


@require_GET
def run_list(request):
    source = get_requested_store(request)
    runs = None
    if source == STORE_MONGO:
        try:
            runs = mongo_repository.list_runs()
        except MongoUnavailableError as exc:
            source = fallback_to_sql(exc)
    if source == STORE_SQL:
        runs = sql_list_runs()
    return JsonResponse({'source': source, 'runs': runs})


@require_GET
def run_detail(request, run_id):
    source = get_requested_store(request)
    run = None
    if source == STORE_MONGO:
        try:
            run = mongo_repository.get_run(run_id)
        except MongoUnavailableError as exc:
            source = fallback_to_sql(exc)
    if source == STORE_SQL:
        run = sql_get_run(run_id)
    return JsonResponse({'source': source, 'run': run})


@require_GET
def run_series_csv(request, run_id):
    source = get_requested_store(request)
    points = None
    if source == STORE_MONGO:
        try:
            points = mongo_repository.points_frame(run_id)
        except MongoUnavailableError as exc:
            source = fallback_to_sql(exc)
    if source == STORE_SQL:
        points = sql_points_frame(run_id)
    response = HttpResponse(content_type='text/csv')
    response['Content-Disposition'] = f'attachment; filename="run{run_id}-series.csv"'
    wide_from_points(points).to_csv(response, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return response
