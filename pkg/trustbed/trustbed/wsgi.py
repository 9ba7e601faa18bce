"""WSGI entry point serving the admin and the read-only results endpoints."""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'trustbed.settings')

application = get_wsgi_application()
