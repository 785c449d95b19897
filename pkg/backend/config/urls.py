"""
URL configuration for the HAC toolkit project.

The API is a read-only view over stored benchmark runs; clustering itself
is driven from the command line (`manage.py cluster`, `manage.py bench`, ...).
"""
from django.contrib import admin
from django.urls import path, include
from django.http import JsonResponse
from django.views.decorators.csrf import csrf_exempt
from rest_framework.routers import DefaultRouter
from backend.clustering.views import BenchmarkResultViewSet, BenchmarkRunViewSet


@csrf_exempt
def api_root(request):
    """Root endpoint - health check and API info"""
    from django.conf import settings
    import os

    return JsonResponse({
        'status': 'online',
        'message': 'HAC toolkit benchmark API',
        'version': '1.0',
        'debug': settings.DEBUG,
        'database_configured': bool(os.environ.get('DATABASE_URL')),
        'defaults': {
            'engine': settings.HAC_TOOLKIT['DEFAULT_ENGINE'],
            'max_leaf_entries': settings.HAC_TOOLKIT['MAX_LEAF_ENTRIES'],
            'cut_k': settings.HAC_TOOLKIT['DEFAULT_CUT_K'],
        },
        'endpoints': {
            'runs': '/api/runs/',
            'results': '/api/results/',
            'admin': '/admin/',
            'api_docs': '/api/',
        }
    })


router = DefaultRouter()
router.register(r'runs', BenchmarkRunViewSet, basename='run')
router.register(r'results', BenchmarkResultViewSet, basename='result')

urlpatterns = [
    # Root endpoint - health check
    path('', api_root, name='api-root'),

    path('admin/', admin.site.urls),

    # /api/runs/, /api/runs/{id}/, /api/runs/{id}/scaling/
    # /api/results/, /api/results/{id}/
    path('api/', include(router.urls)),

    # DRF's browsable API authentication
    path('api-auth/', include('rest_framework.urls')),
]
