# railway_wsgi.py
from pathlib import Path
import os
import sys

from django.core.wsgi import get_wsgi_application

ROOT_DIR = Path(__file__).resolve().parent
PROJECT_DIR = ROOT_DIR / 'trustbed'

# The Django project lives one level down; gunicorn starts from the repo root.
project_path = str(PROJECT_DIR)
if project_path not in sys.path:
    sys.path.insert(0, project_path)

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "trustbed.settings")

application = get_wsgi_application()
