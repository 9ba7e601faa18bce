from django.urls import path

from . import views

urlpatterns = [
    path('runs/', views.run_list, name='run_list'),
    path('runs/<str:run_id>/', views.run_detail, name='run_detail'),
    path('runs/<str:run_id>/series.csv', views.run_series_csv, name='run_series_csv'),
]
